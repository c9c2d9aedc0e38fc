#include "bcskit/pgm.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

namespace bcskit {

namespace {

// Reads the next header token, skipping whitespace and '#' comments.
std::string next_token(std::istream& in, const std::string& path) {
  std::string tok;
  int ch;
  while ((ch = in.get()) != EOF) {
    if (ch == '#') {
      while ((ch = in.get()) != EOF && ch != '\n') {
      }
      continue;
    }
    if (std::isspace(ch)) {
      if (!tok.empty()) return tok;
      continue;
    }
    tok.push_back(static_cast<char>(ch));
  }
  if (tok.empty()) throw std::runtime_error(path + ": truncated PGM header");
  return tok;
}

int parse_dim(const std::string& tok, const std::string& path) {
  std::size_t pos = 0;
  int v;
  try {
    v = std::stoi(tok, &pos);
  } catch (const std::exception&) {
    throw std::runtime_error(path + ": malformed PGM header field '" + tok + "'");
  }
  if (pos != tok.size() || v <= 0)
    throw std::runtime_error(path + ": malformed PGM header field '" + tok + "'");
  return v;
}

}  // namespace

Image load_pgm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error(path + ": cannot open");
  std::string magic = next_token(in, path);
  if (magic != "P5")
    throw std::runtime_error(path + ": not a binary PGM (magic '" + magic + "')");
  int w = parse_dim(next_token(in, path), path);
  int h = parse_dim(next_token(in, path), path);
  int maxval = parse_dim(next_token(in, path), path);
  if (maxval != 255)
    throw std::runtime_error(path + ": unsupported maxval " + std::to_string(maxval));
  // The single whitespace byte after maxval was already consumed by the
  // tokenizer; raw samples start here.
  std::vector<unsigned char> buf(static_cast<std::size_t>(w) * h);
  in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (static_cast<std::size_t>(in.gcount()) != buf.size())
    throw std::runtime_error(path + ": truncated PGM payload");
  Image img(h, w);
  for (std::size_t i = 0; i < buf.size(); ++i) img.data[i] = buf[i];
  return img;
}

void save_pgm(const Image& img, const std::string& path) {
  if (img.height <= 0 || img.width <= 0)
    throw std::invalid_argument("save_pgm: empty image");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error(path + ": cannot open for writing");
  out << "P5\n" << img.width << " " << img.height << "\n255\n";
  std::vector<unsigned char> buf(img.size());
  for (std::size_t i = 0; i < buf.size(); ++i) {
    double v = std::floor(img.data[i] + 0.5);
    if (v < 0.0) v = 0.0;
    if (v > 255.0) v = 255.0;
    buf[i] = static_cast<unsigned char>(v);
  }
  out.write(reinterpret_cast<const char*>(buf.data()),
            static_cast<std::streamsize>(buf.size()));
  if (!out) throw std::runtime_error(path + ": write failed");
}

}  // namespace bcskit
