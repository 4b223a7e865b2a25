#include "dsrf/aanet/checkpoint.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

namespace dsrf::aanet {

namespace {

constexpr char kMagic[4] = {'D', 'S', 'R', 'F'};

template <typename T>
void put(std::ostream& os, T v) {
  static_assert(std::is_integral_v<T> || std::is_same_v<T, float>);
  unsigned char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(buf, buf + sizeof(T));
  os.write(reinterpret_cast<const char*>(buf), sizeof(T));
}

template <typename T>
T get(std::istream& is) {
  unsigned char buf[sizeof(T)];
  if (!is.read(reinterpret_cast<char*>(buf), sizeof(T))) throw Error("checkpoint: unexpected end of file");
  if constexpr (std::endian::native == std::endian::big) std::reverse(buf, buf + sizeof(T));
  T v;
  std::memcpy(&v, buf, sizeof(T));
  return v;
}

void put_string(std::ostream& os, const std::string& s) {
  put<std::uint32_t>(os, static_cast<std::uint32_t>(s.size()));
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string get_string(std::istream& is) {
  const auto n = get<std::uint32_t>(is);
  if (n > (1u << 20)) throw Error("checkpoint: string too long");
  std::string s(n, '\0');
  if (!is.read(s.data(), n)) throw Error("checkpoint: unexpected end of file");
  return s;
}

void put_tensor(std::ostream& os, const std::string& name, const Tensor& t) {
  put_string(os, name);
  put<std::uint32_t>(os, 4);
  for (int d : {t.n(), t.c(), t.h(), t.w()}) put<std::uint32_t>(os, static_cast<std::uint32_t>(d));
  for (std::size_t i = 0; i < t.size(); ++i) put<float>(os, static_cast<float>(t[i]));
}

struct Header {
  NetworkConfig config;
  std::uint64_t hash = 0;
  std::int64_t step = 0;
};

Header read_header(std::istream& is) {
  char magic[4];
  if (!is.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0) throw Error("checkpoint: bad magic");
  const auto version = get<std::uint32_t>(is);
  if (version != kCheckpointVersion) throw Error("checkpoint: unsupported version " + std::to_string(version));
  Header h;
  h.config = parse_network_config(get_string(is));
  h.hash = get<std::uint64_t>(is);
  h.step = get<std::int64_t>(is);
  return h;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("cannot open checkpoint " + path.string());
  return is;
}

}  // namespace

NetworkConfig parse_network_config(const std::string& s) {
  std::map<std::string, std::string> kv;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ';')) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw Error("network config: malformed entry '" + item + "'");
    kv[item.substr(0, eq)] = item.substr(eq + 1);
  }
  try {
    NetworkConfig c;
    c.hidden_layers = std::stoi(kv.at("hidden_layers"));
    c.channels = std::stoi(kv.at("channels"));
    c.dal_kernel = std::stoi(kv.at("dal_kernel"));
    c.embedding_dim = std::stoi(kv.at("embedding_dim"));
    const std::string scale = kv.at("scale");
    const auto slash = scale.find('/');
    c.scale_num = std::stoi(scale.substr(0, slash));
    c.scale_den = std::stoi(scale.substr(slash + 1));
    c.conditioning = parse_conditioning(kv.at("conditioning"));
    c.head = parse_head(kv.at("head"));
    c.validate();
    return c;
  } catch (const Error&) {
    throw;
  } catch (const std::exception& e) {
    throw Error(std::string("network config: ") + e.what());
  }
}

void save_checkpoint(const std::filesystem::path& path, const AaFcnn& net, bool with_optimizer) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot write checkpoint " + path.string());
  os.write(kMagic, 4);
  put<std::uint32_t>(os, kCheckpointVersion);
  put_string(os, net.config().serialize());
  put<std::uint64_t>(os, net.config().hash());
  put<std::int64_t>(os, net.params().step);
  const auto& all = net.params().all();
  const std::uint32_t count = static_cast<std::uint32_t>(all.size() * (with_optimizer ? 3 : 1));
  put<std::uint32_t>(os, count);
  for (const auto& [name, p] : all) put_tensor(os, name, p.value);
  if (with_optimizer) {
    for (const auto& [name, p] : all) put_tensor(os, "adam.m/" + name, p.m);
    for (const auto& [name, p] : all) put_tensor(os, "adam.v/" + name, p.v);
  }
  if (!os) throw Error("error writing checkpoint " + path.string());
}

NetworkConfig read_checkpoint_config(const std::filesystem::path& path) {
  auto is = open_in(path);
  return read_header(is).config;
}

void load_checkpoint(const std::filesystem::path& path, AaFcnn& net) {
  auto is = open_in(path);
  const Header h = read_header(is);
  if (h.hash != net.config().hash() || h.hash != h.config.hash()) {
    throw ConfigMismatch("checkpoint config (" + h.config.serialize() + ") does not match network config (" +
                         net.config().serialize() + ")");
  }
  auto& store = net.params();
  const auto count = get<std::uint32_t>(is);
  std::size_t loaded = 0;
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::string name = get_string(is);
    const auto rank = get<std::uint32_t>(is);
    if (rank != 4) throw Error("checkpoint: tensor '" + name + "' has unsupported rank");
    int dims[4];
    for (int& d : dims) d = static_cast<int>(get<std::uint32_t>(is));
    Tensor* target = nullptr;
    if (name.rfind("adam.m/", 0) == 0) {
      target = &store.get(name.substr(7)).m;
    } else if (name.rfind("adam.v/", 0) == 0) {
      target = &store.get(name.substr(7)).v;
    } else {
      target = &store.get(name).value;
      ++loaded;
    }
    if (target->n() != dims[0] || target->c() != dims[1] || target->h() != dims[2] || target->w() != dims[3]) {
      throw ConfigMismatch("checkpoint: tensor '" + name + "' has an unexpected shape");
    }
    for (std::size_t j = 0; j < target->size(); ++j) (*target)[j] = get<float>(is);
  }
  if (loaded != store.all().size()) throw Error("checkpoint: missing parameter tensors");
  store.step = h.step;
}

std::unique_ptr<AaFcnn> load_network(const std::filesystem::path& path) {
  auto net = std::make_unique<AaFcnn>(read_checkpoint_config(path));
  load_checkpoint(path, *net);
  return net;
}

}  // namespace dsrf::aanet
