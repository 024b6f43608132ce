#include "teta/model_store.hpp"

#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>

#include <zlib.h>

#include "json.hpp"

#include "teta/error.hpp"

namespace teta {
namespace {

using nlohmann::json;

constexpr char kMagic[4] = {'T', 'E', 'T', 'A'};

template <class T>
void put_le(std::vector<std::uint8_t>& out, T value) {
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    out.push_back(static_cast<std::uint8_t>(value >> (8 * i)));
  }
}

template <class T>
T get_le(const std::uint8_t* p) {
  T v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    v |= static_cast<T>(p[i]) << (8 * i);
  }
  return v;
}

std::uint32_t crc32_of(const std::uint8_t* data, std::size_t n) {
  uLong crc = ::crc32(0L, Z_NULL, 0);
  // zlib takes uInt lengths; feed large buffers in pieces.
  while (n > 0) {
    const auto chunk = static_cast<uInt>(std::min<std::size_t>(n, 1u << 30));
    crc = ::crc32(crc, data, chunk);
    data += chunk;
    n -= chunk;
  }
  return static_cast<std::uint32_t>(crc);
}

// Non-finite doubles have no JSON spelling; store them as null.
json number_or_null(double v) {
  return std::isfinite(v) ? json(v) : json(nullptr);
}

double number_from(const json& j) {
  return j.is_null() ? std::nan("") : j.get<double>();
}

json header_json(const ModelBundle& b) {
  const auto& spec = b.network.spec;
  const auto& p = b.preprocessor;
  const auto& m = b.metadata;
  return {
      {"network",
       {{"layer_sizes", spec.layer_sizes},
        {"hidden_activation", nn::to_string(spec.hidden_activation)},
        {"output_activation", nn::to_string(spec.output_activation)},
        {"seed", spec.seed}}},
      {"preprocessor",
       {{"line_slots", p.config.line_slots},
        {"far_threshold_m", p.config.far_threshold_m},
        {"lines", p.vocab.lines.names()},
        {"stops", p.vocab.stops.stops()},
        {"scaler", {{"min", p.scaler.min()}, {"max", p.scaler.max()}}}}},
      {"metadata",
       {{"model_version", m.model_version},
        {"data_fingerprint", m.data_fingerprint},
        {"train_rmse", number_or_null(m.train_rmse)},
        {"val_rmse", number_or_null(m.val_rmse)},
        {"epochs", m.epochs},
        {"best_epoch", m.best_epoch},
        {"optimizer", m.optimizer},
        {"learning_rate", m.learning_rate},
        {"batch_size", m.batch_size},
        {"shuffle_seed", m.shuffle_seed},
        {"train_samples", m.train_samples},
        {"validation_samples", m.validation_samples}}},
  };
}

void read_header(const json& h, ModelBundle& b) {
  const auto& n = h.at("network");
  nn::NetworkSpec spec;
  spec.layer_sizes = n.at("layer_sizes").get<std::vector<std::size_t>>();
  spec.hidden_activation =
      nn::activation_from_string(n.at("hidden_activation").get<std::string>());
  spec.output_activation =
      nn::activation_from_string(n.at("output_activation").get<std::string>());
  spec.seed = n.at("seed").get<std::uint64_t>();
  spec.validate();
  b.network.spec = spec;

  const auto& p = h.at("preprocessor");
  b.preprocessor.config.line_slots = p.at("line_slots").get<std::size_t>();
  b.preprocessor.config.far_threshold_m = p.at("far_threshold_m").get<double>();
  b.preprocessor.vocab.lines =
      LineVocabulary(p.at("lines").get<std::vector<std::string>>());
  b.preprocessor.vocab.stops = StopVocabulary::from_lists(
      p.at("stops").get<std::map<std::string, std::vector<std::string>>>());
  b.preprocessor.scaler =
      MinMaxScaler(p.at("scaler").at("min").get<std::vector<double>>(),
                   p.at("scaler").at("max").get<std::vector<double>>());

  const auto& m = h.at("metadata");
  auto& md = b.metadata;
  md.model_version = m.at("model_version").get<std::string>();
  md.data_fingerprint = m.at("data_fingerprint").get<std::string>();
  md.train_rmse = number_from(m.at("train_rmse"));
  md.val_rmse = number_from(m.at("val_rmse"));
  md.epochs = m.at("epochs").get<int>();
  md.best_epoch = m.at("best_epoch").get<int>();
  md.optimizer = m.at("optimizer").get<std::string>();
  md.learning_rate = m.at("learning_rate").get<double>();
  md.batch_size = m.at("batch_size").get<std::size_t>();
  md.shuffle_seed = m.at("shuffle_seed").get<std::uint64_t>();
  md.train_samples = m.at("train_samples").get<std::size_t>();
  md.validation_samples = m.at("validation_samples").get<std::size_t>();
}

}  // namespace

std::vector<std::uint8_t> serialize_bundle(const ModelBundle& bundle) {
  const std::string header = header_json(bundle).dump();
  const std::size_t params = nn::param_count(bundle.network);
  if (params != nn::param_count(bundle.network.spec)) {
    throw DimensionError("network parameters do not match its spec");
  }
  std::vector<std::uint8_t> out;
  out.reserve(28 + header.size() + 8 * params);
  out.insert(out.end(), std::begin(kMagic), std::end(kMagic));
  put_le<std::uint32_t>(out, kModelFormatVersion);
  put_le<std::uint64_t>(out, header.size());
  out.insert(out.end(), header.begin(), header.end());
  put_le<std::uint64_t>(out, params);
  auto put_double = [&](double v) {
    put_le<std::uint64_t>(out, std::bit_cast<std::uint64_t>(v));
  };
  for (const auto& layer : bundle.network.layers) {
    for (double w : layer.weights.flat()) put_double(w);
    for (double b : layer.bias) put_double(b);
  }
  put_le<std::uint32_t>(out, crc32_of(out.data(), out.size()));
  return out;
}

ModelBundle deserialize_bundle(const std::vector<std::uint8_t>& bytes) {
  const std::size_t size = bytes.size();
  if (size < 16) throw IntegrityError("model file truncated: no header");
  if (std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw IntegrityError("not a model file: bad magic");
  }
  const auto version = get_le<std::uint32_t>(bytes.data() + 4);
  if (version != kModelFormatVersion) {
    throw VersionMismatch(kModelFormatVersion, version);
  }
  const auto header_len = get_le<std::uint64_t>(bytes.data() + 8);
  if (header_len > size - 16 || size - 16 - header_len < 8 + 4) {
    throw IntegrityError("model file truncated: header length " +
                         std::to_string(header_len) + " exceeds file size " +
                         std::to_string(size));
  }
  const std::size_t params_at = 16 + header_len;
  const auto params = get_le<std::uint64_t>(bytes.data() + params_at);
  const std::size_t expected = params_at + 8 + 8 * params + 4;
  if (params > size / 8 || expected != size) {
    throw IntegrityError("model file length " + std::to_string(size) +
                         " does not match the declared " +
                         std::to_string(expected));
  }
  const auto stored_crc = get_le<std::uint32_t>(bytes.data() + size - 4);
  if (stored_crc != crc32_of(bytes.data(), size - 4)) {
    throw IntegrityError("model file checksum mismatch");
  }

  ModelBundle b;
  try {
    const auto first = bytes.begin() + 16;
    read_header(json::parse(first, first + static_cast<std::ptrdiff_t>(header_len)), b);
  } catch (const json::exception& e) {
    throw IntegrityError(std::string("model header is malformed: ") + e.what());
  }
  if (params != nn::param_count(b.network.spec)) {
    throw IntegrityError("parameter count " + std::to_string(params) +
                         " does not match the architecture");
  }
  const std::uint8_t* p = bytes.data() + params_at + 8;
  auto next = [&] {
    double v = std::bit_cast<double>(get_le<std::uint64_t>(p));
    p += 8;
    return v;
  };
  const auto& sizes = b.network.spec.layer_sizes;
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    nn::DenseLayer layer{Matrix(sizes[l + 1], sizes[l]),
                         std::vector<double>(sizes[l + 1])};
    for (auto& w : layer.weights.flat()) w = next();
    for (auto& v : layer.bias) v = next();
    b.network.layers.push_back(std::move(layer));
  }
  return b;
}

void save_bundle(const ModelBundle& bundle, const std::string& path) {
  const auto bytes = serialize_bundle(bundle);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("failed writing '" + path + "'");
}

ModelBundle load_bundle(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open model file '" + path + "'");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return deserialize_bundle(bytes);
}

std::string data_fingerprint(const Matrix& x, const std::vector<double>& y) {
  std::uint64_t h = 0xcbf29ce484222325ull;  // FNV-1a 64
  auto mix = [&](double v) {
    auto bits = std::bit_cast<std::uint64_t>(v);
    for (int i = 0; i < 8; ++i) {
      h ^= (bits >> (8 * i)) & 0xff;
      h *= 0x100000001b3ull;
    }
  };
  for (double v : x.flat()) mix(v);
  for (double v : y) mix(v);
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace teta
