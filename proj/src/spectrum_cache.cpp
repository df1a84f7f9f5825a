#include "trimer/spectrum_cache.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <system_error>
#include <unistd.h>

#include "trimer/errors.hpp"

namespace trimer {

static_assert(std::endian::native == std::endian::little, "cache I/O assumes a little-endian host");

namespace {

constexpr std::array<char, 4> kMagic{'B', 'H', 'T', '1'};

class Fnv1a {
 public:
  void update(const void* data, std::size_t size) {
    const auto* bytes = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < size; ++i) {
      hash_ ^= bytes[i];
      hash_ *= 1099511628211ULL;
    }
  }
  std::uint64_t value() const { return hash_; }

 private:
  std::uint64_t hash_ = 1469598103934665603ULL;
};

class CheckedWriter {
 public:
  explicit CheckedWriter(std::ofstream& out) : out_(out) {}
  void write(const void* data, std::size_t size) {
    out_.write(static_cast<const char*>(data), static_cast<std::streamsize>(size));
    hash_.update(data, size);
  }
  template <typename T>
  void scalar(T value) {
    write(&value, sizeof value);
  }
  std::uint64_t checksum() const { return hash_.value(); }

 private:
  std::ofstream& out_;
  Fnv1a hash_;
};

class CheckedReader {
 public:
  CheckedReader(std::ifstream& in, const std::filesystem::path& path) : in_(in), path_(path) {}
  void read(void* data, std::size_t size) {
    in_.read(static_cast<char*>(data), static_cast<std::streamsize>(size));
    if (in_.gcount() != static_cast<std::streamsize>(size))
      throw CacheError("truncated spectrum cache: " + path_.string());
    hash_.update(data, size);
  }
  template <typename T>
  T scalar() {
    T value;
    read(&value, sizeof value);
    return value;
  }
  std::uint64_t checksum() const { return hash_.value(); }

 private:
  std::ifstream& in_;
  const std::filesystem::path& path_;
  Fnv1a hash_;
};

std::string hex_bits(double x) {
  std::ostringstream os;
  os << std::hex << std::bit_cast<std::uint64_t>(x);
  return os.str();
}

}  // namespace

std::filesystem::path cache_file_name(const ModelParams& params) {
  std::ostringstream name;
  name << "bht_N" << params.N << "_u" << hex_bits(params.u) << "_v" << hex_bits(params.v) << "_o"
       << hex_bits(params.omega) << "_b" << FockBasis::kOrderingVersion << "_f" << kCacheFormatVersion << ".bin";
  return name.str();
}

void write_spectrum(const std::filesystem::path& path, const Spectrum& spectrum) {
  std::random_device entropy;
  std::filesystem::path tmp = path;
  tmp += ".tmp." + std::to_string(::getpid()) + "." + std::to_string(entropy());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw CacheError("cannot open " + tmp.string() + " for writing");
    CheckedWriter w(out);
    w.write(kMagic.data(), kMagic.size());
    w.scalar<std::uint64_t>(kCacheFormatVersion);
    w.scalar<std::uint64_t>(static_cast<std::uint64_t>(spectrum.params.N));
    w.scalar<double>(spectrum.params.u);
    w.scalar<double>(spectrum.params.v);
    w.scalar<double>(spectrum.params.omega);
    const auto dim = static_cast<std::uint64_t>(spectrum.dimension());
    w.scalar<std::uint64_t>(dim);
    w.write(spectrum.energies.data(), dim * sizeof(double));
    w.write(spectrum.eigenvectors.data(), dim * dim * sizeof(double));
    const std::uint64_t checksum = w.checksum();
    out.write(reinterpret_cast<const char*>(&checksum), sizeof checksum);
    if (!out) throw CacheError("write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw CacheError("cannot move cache into place at " + path.string() + ": " + ec.message());
  }
}

Spectrum read_spectrum(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CacheError("cannot open spectrum cache " + path.string());
  CheckedReader r(in, path);
  std::array<char, 4> magic{};
  r.read(magic.data(), magic.size());
  if (magic != kMagic) throw CacheError("bad magic in " + path.string());
  const auto version = r.scalar<std::uint64_t>();
  if (version != kCacheFormatVersion)
    throw CacheError("stale cache format version " + std::to_string(version) + " in " + path.string());
  Spectrum s;
  s.params.N = static_cast<int>(r.scalar<std::uint64_t>());
  s.params.u = r.scalar<double>();
  s.params.v = r.scalar<double>();
  s.params.omega = r.scalar<double>();
  const auto dim = r.scalar<std::uint64_t>();
  if (s.params.N < 1 || dim != dimension(s.params.N)) throw CacheError("inconsistent header in " + path.string());
  s.energies.resize(static_cast<Eigen::Index>(dim));
  s.eigenvectors.resize(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
  r.read(s.energies.data(), dim * sizeof(double));
  r.read(s.eigenvectors.data(), dim * dim * sizeof(double));
  const std::uint64_t expected = r.checksum();
  std::uint64_t stored = 0;
  in.read(reinterpret_cast<char*>(&stored), sizeof stored);
  if (in.gcount() != sizeof stored) throw CacheError("truncated spectrum cache: " + path.string());
  if (stored != expected) throw CacheError("checksum mismatch in " + path.string());
  s.basis_fingerprint = FockBasis(s.params.N).fingerprint();
  return s;
}

Spectrum load_or_compute_spectrum(const ModelParams& params, const std::filesystem::path& dir) {
  params.validate();
  if (!dir.empty()) {
    const auto path = dir / cache_file_name(params);
    if (std::filesystem::exists(path)) {
      try {
        Spectrum cached = read_spectrum(path);
        if (cached.params == params) return cached;
      } catch (const CacheError&) {
        // fall through and overwrite
      }
    }
  }
  Spectrum fresh = diagonalize(build_hamiltonian(build_basis(params.N), params));
  if (!dir.empty()) {
    std::filesystem::create_directories(dir);
    write_spectrum(dir / cache_file_name(params), fresh);
  }
  return fresh;
}

}  // namespace trimer
