#include "intentsieve/feature_io.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <vector>

#include "intentsieve/error.hpp"

namespace isv::dsp {

namespace {

static_assert(sizeof(float) == 4, "32-bit IEEE float required");

// The dump format is little-endian; this code targets little-endian hosts
// and round-trips through raw float bytes.

}  // namespace

void save_feature(const std::string& path, const AcousticFeature& f) {
  if (f.rows <= 0 || f.cols <= 0 ||
      f.matrix.size() != static_cast<std::size_t>(f.rows) * f.cols)
    throw InvalidInput("feature matrix shape does not match rows/cols");

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << "ISF1 " << f.rows << ' ' << f.cols << '\n';
  std::vector<float> buf(f.matrix.size());
  for (std::size_t i = 0; i < f.matrix.size(); ++i)
    buf[i] = static_cast<float>(f.matrix[i]);
  out.write(reinterpret_cast<const char*>(buf.data()),
            static_cast<std::streamsize>(buf.size() * sizeof(float)));
  if (!out) throw IoError("write failed: " + path);
}

AcousticFeature load_feature(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open feature file: " + path);

  std::string header;
  if (!std::getline(in, header)) throw ParseError("missing header line: " + path);
  std::istringstream hs(header);
  std::string magic;
  long long rows = 0, cols = 0;
  if (!(hs >> magic >> rows >> cols) || magic != "ISF1")
    throw ParseError("bad feature header in: " + path);
  if (rows <= 0 || cols <= 0)
    throw ParseError("non-positive dimensions in feature header: " + path);

  AcousticFeature f;
  f.rows = static_cast<int>(rows);
  f.cols = static_cast<int>(cols);
  f.valid_frames = f.rows;  // the dump does not record padding
  const std::size_t count = static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols);
  std::vector<float> buf(count);
  in.read(reinterpret_cast<char*>(buf.data()),
          static_cast<std::streamsize>(count * sizeof(float)));
  if (static_cast<std::size_t>(in.gcount()) != count * sizeof(float))
    throw ParseError("feature payload truncated: " + path);
  f.matrix.resize(count);
  for (std::size_t i = 0; i < count; ++i) f.matrix[i] = buf[i];
  return f;
}

}  // namespace isv::dsp
