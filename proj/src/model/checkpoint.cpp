#include "lead/model/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

#include "lead/error.hpp"

namespace lead::model {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes little endian");

namespace {

constexpr const char* kMagic = "LEADCKPT";
constexpr int kVersion = 1;

std::string read_line(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw FormatError("checkpoint truncated");
  return line;
}

}  // namespace

void save_checkpoint(const RetrievalModel& model, std::ostream& out) {
  const ModelConfig& c = model.config();
  out << kMagic << ' ' << kVersion << '\n';
  out << "variant " << variant_name(c.variant) << '\n';
  out << "num_layers " << c.encoder.num_layers << '\n';
  out << "hidden_dim " << c.encoder.hidden_dim << '\n';
  out << "ff_dim " << c.encoder.ff_dim << '\n';
  out << "vocab_size " << c.encoder.vocab_size << '\n';
  out << "max_positions " << c.encoder.max_positions << '\n';
  out << "projection_dim " << c.projection_dim << '\n';
  out << "cb_cls_only_intermediate " << (c.cb_cls_only_intermediate ? 1 : 0) << '\n';
  out << "seed " << c.seed << '\n';
  const auto params = model.named_parameters();
  out << "params " << params.size() << '\n';
  for (const auto& [name, t] : params) {
    out << name << ' ' << t.rows() << ' ' << t.cols() << '\n';
    out.write(reinterpret_cast<const char*>(t.values().data()),
              static_cast<std::streamsize>(t.size() * sizeof(double)));
    out << '\n';
  }
  if (!out) throw IoError("failed writing checkpoint");
}

void save_checkpoint(const RetrievalModel& model, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open checkpoint for writing: " + path);
  save_checkpoint(model, out);
}

RetrievalModel load_checkpoint(std::istream& in) {
  {
    std::istringstream magic(read_line(in));
    std::string word;
    int version = 0;
    magic >> word >> version;
    if (word != kMagic || version != kVersion) throw FormatError("not a checkpoint (bad magic)");
  }
  std::map<std::string, std::string> header;
  std::size_t count = 0;
  for (;;) {
    std::istringstream ls(read_line(in));
    std::string key, value;
    ls >> key >> value;
    if (key == "params") {
      count = std::stoull(value);
      break;
    }
    header[key] = value;
  }
  auto field = [&](const char* k) -> const std::string& {
    auto it = header.find(k);
    if (it == header.end()) throw FormatError(std::string("checkpoint header lacks ") + k);
    return it->second;
  };
  ModelConfig c;
  try {
    c.variant = parse_variant(field("variant"));
    c.encoder.num_layers = std::stoull(field("num_layers"));
    c.encoder.hidden_dim = std::stoull(field("hidden_dim"));
    c.encoder.ff_dim = std::stoull(field("ff_dim"));
    c.encoder.vocab_size = std::stoull(field("vocab_size"));
    c.encoder.max_positions = std::stoull(field("max_positions"));
    c.projection_dim = std::stoull(field("projection_dim"));
    c.cb_cls_only_intermediate = field("cb_cls_only_intermediate") == "1";
    c.seed = std::stoull(field("seed"));
  } catch (const std::logic_error&) {
    throw FormatError("malformed checkpoint header value");
  }

  RetrievalModel model(c);
  auto params = model.named_parameters();
  if (params.size() != count) throw FormatError("checkpoint parameter count mismatch");
  for (auto& [name, t] : params) {
    std::istringstream ls(read_line(in));
    std::string got;
    std::size_t rows = 0, cols = 0;
    ls >> got >> rows >> cols;
    if (got != name || rows != t.rows() || cols != t.cols()) {
      throw FormatError("checkpoint parameter '" + got + "' does not match expected '" + name + "'");
    }
    auto dst = t.data();
    in.read(reinterpret_cast<char*>(dst.data()), static_cast<std::streamsize>(dst.size() * sizeof(double)));
    if (!in || in.get() != '\n') throw FormatError("checkpoint truncated in parameter " + name);
  }
  return model;
}

RetrievalModel load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint: " + path);
  return load_checkpoint(in);
}

}  // namespace lead::model
