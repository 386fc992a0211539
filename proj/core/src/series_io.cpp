#include <bit>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iterator>

#include "htwin/errors.hpp"
#include "htwin/fem.hpp"

namespace htwin {
namespace {

constexpr char kMagic[8] = {'H', 'T', 'W', 'S', 'E', 'R', '0', '1'};

class LeWriter {
 public:
  explicit LeWriter(std::vector<char>& buf) : buf_(buf) {}
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }

 private:
  std::vector<char>& buf_;
};

class LeReader {
 public:
  LeReader(const std::vector<char>& buf, std::string what) : buf_(buf), what_(std::move(what)) {}
  std::uint64_t u64() { return unsigned_le(8); }
  std::uint32_t u32() { return static_cast<std::uint32_t>(unsigned_le(4)); }
  double f64() { return std::bit_cast<double>(u64()); }
  std::string bytes(std::size_t n) {
    need(n);
    std::string s(buf_.begin() + pos_, buf_.begin() + pos_ + n);
    pos_ += n;
    return s;
  }
  std::size_t remaining() const { return buf_.size() - pos_; }

 private:
  std::uint64_t unsigned_le(int width) {
    need(width);
    std::uint64_t v = 0;
    for (int i = 0; i < width; ++i) {
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(buf_[pos_ + i])) << (8 * i);
    }
    pos_ += width;
    return v;
  }
  void need(std::size_t n) const {
    if (pos_ + n > buf_.size()) throw DataError("series file truncated: " + what_);
  }

  const std::vector<char>& buf_;
  std::string what_;
  std::size_t pos_ = 0;
};

}  // namespace

void save_series_binary(const SimulationSeries& series, const std::filesystem::path& path) {
  std::vector<char> buf(std::begin(kMagic), std::end(kMagic));
  LeWriter w(buf);
  w.u32(static_cast<std::uint32_t>(series.mesh_id.size()));
  buf.insert(buf.end(), series.mesh_id.begin(), series.mesh_id.end());
  w.u64(static_cast<std::uint64_t>(series.num_nodes()));
  w.u64(static_cast<std::uint64_t>(series.num_frames()));
  w.f64(series.dt);
  w.f64(series.t_init);
  w.f64(series.t_dirichlet);
  w.f64(series.material.rho_cp);
  w.f64(series.material.k0);
  w.f64(series.material.beta);
  w.f64(series.material.t0);
  for (const auto& frame : series.frames) {
    if (static_cast<int>(frame.size()) != series.num_nodes()) {
      throw DataError("save_series_binary: ragged frames");
    }
    for (double v : frame) w.f64(v);
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write series file " + path.string());
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) throw IoError("failed writing series file " + path.string());
}

SimulationSeries load_series_binary(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("missing series file " + path.string());
  const std::vector<char> buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  LeReader r(buf, path.string());
  if (r.bytes(8) != std::string(kMagic, 8)) throw DataError("not a series file: " + path.string());
  SimulationSeries s;
  s.mesh_id = r.bytes(r.u32());
  const std::uint64_t n_nodes = r.u64();
  const std::uint64_t n_frames = r.u64();
  s.dt = r.f64();
  s.t_init = r.f64();
  s.t_dirichlet = r.f64();
  s.material.rho_cp = r.f64();
  s.material.k0 = r.f64();
  s.material.beta = r.f64();
  s.material.t0 = r.f64();
  if (r.remaining() != n_nodes * n_frames * 8) {
    throw DataError("series file payload size mismatch: " + path.string());
  }
  s.frames.assign(n_frames, std::vector<double>(n_nodes));
  for (auto& frame : s.frames) {
    for (double& v : frame) v = r.f64();
  }
  return s;
}

void export_series_csv(const SimulationSeries& series, const std::filesystem::path& path) {
  std::FILE* f = std::fopen(path.string().c_str(), "wb");
  if (!f) throw IoError("cannot write " + path.string());
  std::fprintf(f, "frame,time");
  for (int v = 0; v < series.num_nodes(); ++v) std::fprintf(f, ",node_%d", v);
  std::fprintf(f, "\n");
  for (int t = 0; t < series.num_frames(); ++t) {
    std::fprintf(f, "%d,%.17g", t, t * series.dt);
    for (double v : series.frames[t]) std::fprintf(f, ",%.17g", v);
    std::fprintf(f, "\n");
  }
  const bool ok = std::ferror(f) == 0;
  std::fclose(f);
  if (!ok) throw IoError("failed writing " + path.string());
}

}  // namespace htwin
