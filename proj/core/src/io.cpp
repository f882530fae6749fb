#include "crossrec/io.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace crossrec {

namespace fs = std::filesystem;

namespace {

constexpr const char* kMagic = "CROSSREC_MODEL v1";

void write_matrix(std::ostream& out, const std::string& name, const Matrix& m) {
  out << "matrix " << name << ' ' << m.rows() << ' ' << m.cols() << '\n';
  char buf[40];
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      std::snprintf(buf, sizeof(buf), "%.17g", m(i, j));
      out << buf << (j + 1 == m.cols() ? '\n' : ' ');
    }
  }
}

Matrix read_matrix(std::istream& in, const std::string& expect_name) {
  std::string kw, name;
  Eigen::Index rows = 0, cols = 0;
  in >> kw >> name >> rows >> cols;
  if (kw != "matrix" || name != expect_name)
    throw std::runtime_error("model file: expected matrix " + expect_name);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j)
      if (!(in >> m(i, j))) throw std::runtime_error("model file: truncated matrix");
  return m;
}

void write_mlp(std::ostream& out, const std::string& name, const Mlp& mlp) {
  out << "mlp " << name << ' ' << mlp.input_dim() << ' ' << mlp.layers().size() << '\n';
  for (std::size_t li = 0; li < mlp.layers().size(); ++li) {
    const auto& layer = mlp.layers()[li];
    out << "layer " << li << ' '
        << (layer.act == Activation::kElu ? "elu" : "linear") << ' '
        << layer.dropout << '\n';
    write_matrix(out, "W", layer.weight.value);
    write_matrix(out, "b", layer.bias.value);
  }
}

Mlp read_mlp(std::istream& in, const std::string& expect_name) {
  std::string kw, name;
  int input_dim = 0;
  std::size_t n_layers = 0;
  in >> kw >> name >> input_dim >> n_layers;
  if (kw != "mlp" || name != expect_name)
    throw std::runtime_error("model file: expected mlp " + expect_name);
  std::vector<LayerSpec> specs;
  std::vector<std::pair<Matrix, Matrix>> values;
  for (std::size_t li = 0; li < n_layers; ++li) {
    std::size_t idx;
    std::string act;
    double dropout;
    in >> kw >> idx >> act >> dropout;
    if (kw != "layer") throw std::runtime_error("model file: expected layer");
    Matrix w = read_matrix(in, "W");
    Matrix b = read_matrix(in, "b");
    specs.push_back({static_cast<int>(w.rows()),
                     act == "elu" ? Activation::kElu : Activation::kLinear, dropout});
    values.emplace_back(std::move(w), std::move(b));
  }
  Rng unused(0);
  Mlp mlp(input_dim, specs, unused);
  for (std::size_t li = 0; li < n_layers; ++li) {
    mlp.layers()[li].weight.value = values[li].first;
    mlp.layers()[li].bias.value = values[li].second;
  }
  return mlp;
}

void write_ints(std::ostream& out, const std::string& key, const std::vector<int>& v) {
  out << key;
  for (int x : v) out << ' ' << x;
  out << '\n';
}

std::vector<int> read_ints(std::istream& in, const std::string& key) {
  std::string kw;
  in >> kw;
  if (kw != key) throw std::runtime_error("model file: expected " + key);
  std::string rest;
  std::getline(in, rest);
  std::istringstream ss(rest);
  std::vector<int> out;
  int x;
  while (ss >> x) out.push_back(x);
  return out;
}

}  // namespace

void save_dsn_model(const DsnModel& model, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path);
  f << kMagic << "\nkind dsn\n";
  const DsnDims& d = model.dims;
  f << "dims " << d.input_dim << ' ' << d.num_labels << ' ' << d.code_dim << ' '
    << d.user_dim << '\n';
  write_ints(f, "encoder_hidden", d.encoder_hidden);
  write_ints(f, "decoder_hidden", d.decoder_hidden);
  write_ints(f, "classifier_hidden", d.classifier_hidden);
  write_ints(f, "disc_hidden", d.disc_hidden);
  f << "dropout " << d.encoder_dropout << ' ' << d.decoder_dropout << ' '
    << d.classifier_dropout << ' ' << d.disc_dropout << '\n';
  write_mlp(f, "shared_encoder", model.shared_encoder);
  write_mlp(f, "private_encoder_src", model.private_encoder_src);
  write_mlp(f, "private_encoder_tgt", model.private_encoder_tgt);
  write_mlp(f, "decoder", model.decoder);
  write_mlp(f, "classifier", model.classifier);
  write_mlp(f, "domain_disc", model.domain_disc);
  write_matrix(f, "softmax_weights", model.softmax_weights.value);
}

DsnModel load_dsn_model(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot read " + path);
  std::string line;
  std::getline(f, line);
  if (line != kMagic) throw std::runtime_error(path + ": not a crossrec model");
  std::string kw, kind;
  f >> kw >> kind;
  if (kw != "kind" || kind != "dsn") throw std::runtime_error(path + ": not a dsn model");
  DsnModel model;
  DsnDims& d = model.dims;
  f >> kw >> d.input_dim >> d.num_labels >> d.code_dim >> d.user_dim;
  if (kw != "dims") throw std::runtime_error("model file: expected dims");
  d.encoder_hidden = read_ints(f, "encoder_hidden");
  d.decoder_hidden = read_ints(f, "decoder_hidden");
  d.classifier_hidden = read_ints(f, "classifier_hidden");
  d.disc_hidden = read_ints(f, "disc_hidden");
  f >> kw >> d.encoder_dropout >> d.decoder_dropout >> d.classifier_dropout >>
      d.disc_dropout;
  if (kw != "dropout") throw std::runtime_error("model file: expected dropout");
  model.shared_encoder = read_mlp(f, "shared_encoder");
  model.private_encoder_src = read_mlp(f, "private_encoder_src");
  model.private_encoder_tgt = read_mlp(f, "private_encoder_tgt");
  model.decoder = read_mlp(f, "decoder");
  model.classifier = read_mlp(f, "classifier");
  model.domain_disc = read_mlp(f, "domain_disc");
  Matrix v = read_matrix(f, "softmax_weights");
  model.softmax_weights = Param(static_cast<int>(v.rows()), static_cast<int>(v.cols()));
  model.softmax_weights.value = v;
  return model;
}

void save_sdae_model(const SdaeModel& model, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path);
  f << kMagic << "\nkind sdae\n";
  f << "shape " << model.item_dim << ' ' << model.cfg.hidden_dim << ' '
    << model.cfg.code_dim << '\n';
  f << "rates " << model.cfg.input_corruption << ' ' << model.cfg.hidden_dropout << '\n';
  write_mlp(f, "encoder", model.encoder);
  write_mlp(f, "decoder", model.decoder);
}

SdaeModel load_sdae_model(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot read " + path);
  std::string line;
  std::getline(f, line);
  if (line != kMagic) throw std::runtime_error(path + ": not a crossrec model");
  std::string kw, kind;
  f >> kw >> kind;
  if (kw != "kind" || kind != "sdae") throw std::runtime_error(path + ": not an sdae model");
  SdaeModel model;
  f >> kw >> model.item_dim >> model.cfg.hidden_dim >> model.cfg.code_dim;
  if (kw != "shape") throw std::runtime_error("model file: expected shape");
  f >> kw >> model.cfg.input_corruption >> model.cfg.hidden_dropout;
  if (kw != "rates") throw std::runtime_error("model file: expected rates");
  model.encoder = read_mlp(f, "encoder");
  model.decoder = read_mlp(f, "decoder");
  return model;
}

std::string file_hash_hex(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot read " + path);
  std::uint64_t h = 0xcbf29ce484222325ull;
  char buf[4096];
  while (f.read(buf, sizeof(buf)) || f.gcount() > 0) {
    for (std::streamsize i = 0; i < f.gcount(); ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 0x100000001b3ull;
    }
  }
  char out[17];
  std::snprintf(out, sizeof(out), "%016llx", static_cast<unsigned long long>(h));
  return out;
}

void write_manifest(const std::string& dir) {
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().filename() != "MANIFEST.txt")
      files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  std::ofstream f(fs::path(dir) / "MANIFEST.txt");
  if (!f) throw std::runtime_error("cannot write manifest in " + dir);
  for (const auto& p : files)
    f << p.filename().string() << '\t' << fs::file_size(p) << '\t'
      << file_hash_hex(p.string()) << '\n';
}

}  // namespace crossrec
