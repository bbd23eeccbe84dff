#include "mpcc/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include "mpcc/error.hpp"

namespace mpcc {

namespace {

constexpr const char* kMagic = "MPCC1";

void put_f64(std::ostream& os, double v) {
  auto bits = std::bit_cast<std::uint64_t>(v);
  char buf[8];
  for (int i = 0; i < 8; ++i) buf[i] = static_cast<char>((bits >> (8 * i)) & 0xFF);
  os.write(buf, 8);
}

double get_f64(const unsigned char* p) {
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(p[i]) << (8 * i);
  return std::bit_cast<double>(bits);
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const std::vector<NamedTensor>& tensors) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot open checkpoint for writing: " + path.string());
  os << kMagic << '\n';
  for (const auto& nt : tensors) {
    if (nt.name.empty() || nt.name.find_first_of(" \t\n") != std::string::npos) {
      throw UsageError("checkpoint tensor name must be a non-empty token: '" + nt.name + "'");
    }
    const auto& shape = nt.tensor.shape();
    os << nt.name << ' ' << shape.size();
    for (auto d : shape) os << ' ' << d;
    os << '\n';
  }
  os << '\n';
  for (const auto& nt : tensors) {
    for (double v : nt.tensor.data()) put_f64(os, v);
  }
  if (!os) throw IoError("failed writing checkpoint: " + path.string());
}

std::vector<NamedTensor> load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open checkpoint: " + path.string());
  std::string line;
  if (!std::getline(is, line) || line != kMagic) {
    throw VersionError("not an MPCC1 checkpoint: " + path.string());
  }
  std::vector<std::pair<std::string, Shape>> header;
  while (std::getline(is, line) && !line.empty()) {
    std::istringstream ls(line);
    std::string name;
    std::size_t rank = 0;
    if (!(ls >> name >> rank)) throw IoError("malformed checkpoint header line: " + line);
    Shape shape(rank);
    for (auto& d : shape) {
      if (!(ls >> d)) throw IoError("malformed checkpoint header line: " + line);
    }
    header.emplace_back(std::move(name), std::move(shape));
  }
  std::vector<NamedTensor> out;
  std::vector<unsigned char> buf;
  for (auto& [name, shape] : header) {
    const std::size_t n = shape_numel(shape);
    buf.resize(n * 8);
    is.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    if (static_cast<std::size_t>(is.gcount()) != buf.size()) {
      throw IoError("truncated checkpoint payload for '" + name + "' in " + path.string());
    }
    std::vector<double> values(n);
    for (std::size_t i = 0; i < n; ++i) values[i] = get_f64(buf.data() + 8 * i);
    out.push_back({name, Tensor::from(shape, std::move(values))});
  }
  return out;
}

void restore_into(const std::vector<NamedTensor>& loaded, std::vector<NamedTensor>& target) {
  std::unordered_map<std::string, const Tensor*> by_name;
  for (const auto& nt : loaded) by_name[nt.name] = &nt.tensor;
  if (loaded.size() != target.size()) {
    throw VersionError("checkpoint holds " + std::to_string(loaded.size()) +
                       " tensors, model expects " + std::to_string(target.size()));
  }
  for (auto& nt : target) {
    auto it = by_name.find(nt.name);
    if (it == by_name.end()) throw VersionError("checkpoint is missing tensor '" + nt.name + "'");
    if (it->second->shape() != nt.tensor.shape()) {
      throw VersionError("checkpoint tensor '" + nt.name + "' has shape " +
                         shape_str(it->second->shape()) + ", model expects " +
                         shape_str(nt.tensor.shape()));
    }
    auto src = it->second->data();
    auto dst = nt.tensor.mutable_data();
    std::copy(src.begin(), src.end(), dst.begin());
  }
}

}  // namespace mpcc
