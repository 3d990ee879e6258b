#include "pkef/run/checkpoint.hpp"

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "pkef/errors.hpp"

namespace pkef {
namespace {

constexpr char kMagic[4] = {'P', 'K', 'E', 'F'};

template <typename T>
void put(std::vector<unsigned char>& out, T value) {
  static_assert(std::is_trivially_copyable_v<T>);
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  out.insert(out.end(), bytes, bytes + sizeof(T));
}

class Reader {
 public:
  explicit Reader(std::vector<unsigned char> data) : data_(std::move(data)) {}

  template <typename T>
  T get() {
    need(sizeof(T));
    unsigned char bytes[sizeof(T)];
    std::memcpy(bytes, data_.data() + pos_, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
    pos_ += sizeof(T);
    T value;
    std::memcpy(&value, bytes, sizeof(T));
    return value;
  }

  std::string text(std::size_t n) {
    need(n);
    std::string s(reinterpret_cast<const char*>(data_.data() + pos_), n);
    pos_ += n;
    return s;
  }

  bool done() const { return pos_ == data_.size(); }

 private:
  void need(std::size_t n) const {
    if (data_.size() - pos_ < n) throw FormatError("checkpoint is truncated");
  }

  std::vector<unsigned char> data_;
  std::size_t pos_ = 0;
};

}  // namespace

void save_checkpoint(const ParameterStore& params, const std::filesystem::path& path) {
  std::vector<unsigned char> out(std::begin(kMagic), std::end(kMagic));
  put<std::uint32_t>(out, kCheckpointVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(params.size()));
  for (const auto& p : params) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(p.name.size()));
    out.insert(out.end(), p.name.begin(), p.name.end());
    put<std::uint64_t>(out, p.value.rows());
    put<std::uint64_t>(out, p.value.cols());
  }
  for (const auto& p : params) {
    for (double v : p.value.values()) put<double>(out, v);
  }
  std::ofstream file(path, std::ios::binary);
  if (!file) throw IoError("cannot write checkpoint " + path.string());
  file.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
  if (!file) throw IoError("failed writing checkpoint " + path.string());
}

void load_checkpoint(ParameterStore& params, const std::filesystem::path& path) {
  std::ifstream file(path, std::ios::binary);
  if (!file) throw IoError("cannot open checkpoint " + path.string());
  Reader in(std::vector<unsigned char>(std::istreambuf_iterator<char>(file), {}));
  if (in.text(4) != std::string(kMagic, 4)) throw FormatError("not a checkpoint file");
  const auto version = in.get<std::uint32_t>();
  if (version != kCheckpointVersion) {
    throw FormatError("unsupported checkpoint version " + std::to_string(version));
  }
  const auto count = in.get<std::uint32_t>();
  if (count != params.size()) {
    throw ConfigError("checkpoint holds " + std::to_string(count) + " parameters, model has " +
                      std::to_string(params.size()));
  }
  for (std::size_t i = 0; i < count; ++i) {
    const auto len = in.get<std::uint32_t>();
    const std::string name = in.text(len);
    const auto rows = in.get<std::uint64_t>();
    const auto cols = in.get<std::uint64_t>();
    const auto& p = params[i];
    if (name != p.name || rows != p.value.rows() || cols != p.value.cols()) {
      throw ConfigError("checkpoint entry " + name + " (" + std::to_string(rows) + "x" +
                        std::to_string(cols) + ") does not match model parameter " + p.name +
                        " (" + std::to_string(p.value.rows()) + "x" +
                        std::to_string(p.value.cols()) + ")");
    }
  }
  std::vector<DenseMatrix> values;
  for (std::size_t i = 0; i < count; ++i) {
    DenseMatrix m(params[i].value.rows(), params[i].value.cols());
    for (double& v : m.values()) v = in.get<double>();
    if (!m.all_finite()) throw FormatError("checkpoint contains non-finite values");
    values.push_back(std::move(m));
  }
  if (!in.done()) throw FormatError("checkpoint has trailing bytes");
  for (std::size_t i = 0; i < count; ++i) params[i].value = std::move(values[i]);
}

}  // namespace pkef
