#include "tml/io.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>

namespace tml {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

namespace {

bool parse_double(const std::string& s, double& out) {
  if (s.empty()) return false;
  char* end = nullptr;
  out = std::strtod(s.c_str(), &end);
  return end == s.c_str() + s.size();
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  fields.push_back(cur);
  for (auto& f : fields) {
    const auto begin = f.find_first_not_of(" \t");
    const auto end = f.find_last_not_of(" \t");
    f = begin == std::string::npos ? "" : f.substr(begin, end - begin + 1);
  }
  return fields;
}

int label_id(Dataset& ds, const std::string& name) {
  for (std::size_t i = 0; i < ds.label_names.size(); ++i)
    if (ds.label_names[i] == name) return static_cast<int>(i);
  ds.label_names.push_back(name);
  return static_cast<int>(ds.label_names.size() - 1);
}

}  // namespace

Dataset load_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_csv: cannot open " + path);

  std::vector<std::vector<std::string>> rows;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    rows.push_back(split_csv_line(line));
  }
  if (rows.empty()) throw ParseError("empty dataset file", 1, 1);

  // Header heuristic: row 1 is a header when any of its feature fields is
  // not numeric.
  std::size_t first_data = 0;
  {
    double tmp;
    for (std::size_t c = 0; c + 1 < rows[0].size(); ++c)
      if (!parse_double(rows[0][c], tmp)) {
        first_data = 1;
        break;
      }
  }
  if (first_data >= rows.size())
    throw ParseError("no data rows after header", 2, 1);

  const std::size_t width = rows[first_data].size();
  if (width < 2) throw ParseError("need at least one feature and a label",
                                  static_cast<int>(first_data) + 1, 1);
  const std::size_t n = rows.size() - first_data;
  if (n < 2) throw ParseError("need at least 2 samples",
                              static_cast<int>(rows.size()), 1);

  Dataset ds;
  ds.X.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(width - 1));
  for (std::size_t r = 0; r < n; ++r) {
    const auto& fields = rows[first_data + r];
    const int file_line = static_cast<int>(first_data + r) + 1;
    if (fields.size() != width)
      throw ParseError("ragged row: expected " + std::to_string(width) +
                           " fields, got " + std::to_string(fields.size()),
                       file_line, 1);
    for (std::size_t c = 0; c + 1 < width; ++c) {
      double v;
      if (!parse_double(fields[c], v))
        throw ParseError("non-numeric feature '" + fields[c] + "'", file_line,
                         static_cast<int>(c) + 1);
      if (!std::isfinite(v))
        throw ParseError("non-finite feature value", file_line,
                         static_cast<int>(c) + 1);
      ds.X(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = v;
    }
    ds.labels.push_back(label_id(ds, fields[width - 1]));
  }
  return ds;
}

Dataset load_libsvm(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_libsvm: cannot open " + path);

  std::vector<std::string> row_labels;
  std::vector<std::vector<std::pair<int, double>>> row_entries;
  Eigen::Index max_index = 0;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream ls(line);
    std::string label;
    if (!(ls >> label)) continue;
    std::vector<std::pair<int, double>> entries;
    std::string tok;
    while (ls >> tok) {
      const auto colon = tok.find(':');
      if (colon == std::string::npos)
        throw ParseError("expected index:value, got '" + tok + "'", lineno, 1);
      double v;
      int idx;
      try {
        idx = std::stoi(tok.substr(0, colon));
      } catch (const std::exception&) {
        throw ParseError("bad feature index in '" + tok + "'", lineno, 1);
      }
      if (idx < 1) throw ParseError("feature indices are 1-based", lineno, 1);
      if (!parse_double(tok.substr(colon + 1), v) || !std::isfinite(v))
        throw ParseError("bad feature value in '" + tok + "'", lineno, 1);
      entries.emplace_back(idx, v);
      max_index = std::max<Eigen::Index>(max_index, idx);
    }
    row_labels.push_back(label);
    row_entries.push_back(std::move(entries));
  }
  if (row_labels.size() < 2)
    throw ParseError("need at least 2 samples", lineno, 1);

  Dataset ds;
  ds.X = Matrix::Zero(static_cast<Eigen::Index>(row_labels.size()), max_index);
  for (std::size_t r = 0; r < row_labels.size(); ++r) {
    for (const auto& [idx, v] : row_entries[r])
      ds.X(static_cast<Eigen::Index>(r), idx - 1) = v;
    ds.labels.push_back(label_id(ds, row_labels[r]));
  }
  return ds;
}

void save_csv(const Dataset& ds, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_csv: cannot open " + path);
  for (Eigen::Index r = 0; r < ds.X.rows(); ++r) {
    for (Eigen::Index c = 0; c < ds.X.cols(); ++c)
      out << format_double(ds.X(r, c)) << ',';
    out << ds.label_names[static_cast<std::size_t>(
               ds.labels[static_cast<std::size_t>(r)])]
        << '\n';
  }
}

std::string to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::MMC: return "MMC";
    case ModelKind::TML_NN: return "TML_NN";
    case ModelKind::TML_SVM: return "TML_SVM";
    case ModelKind::KERNEL_TML_SVM: return "KERNEL_TML_SVM";
  }
  throw std::logic_error("unknown model kind");
}

ModelKind model_kind_from_string(const std::string& s) {
  if (s == "MMC") return ModelKind::MMC;
  if (s == "TML_NN") return ModelKind::TML_NN;
  if (s == "TML_SVM") return ModelKind::TML_SVM;
  if (s == "KERNEL_TML_SVM") return ModelKind::KERNEL_TML_SVM;
  throw std::runtime_error("unknown model kind '" + s + "'");
}

namespace {

const char* kernel_name(KernelFamily f) {
  switch (f) {
    case KernelFamily::R2LOGR: return "R2LOGR";
    case KernelFamily::R1: return "R1";
    case KernelFamily::R3: return "R3";
  }
  throw std::logic_error("unknown kernel family");
}

KernelFamily kernel_family_from_name(const std::string& s) {
  if (s == "R2LOGR") return KernelFamily::R2LOGR;
  if (s == "R1") return KernelFamily::R1;
  if (s == "R3") return KernelFamily::R3;
  throw std::runtime_error("unknown kernel family '" + s + "'");
}

void write_matrix(std::ostream& os, const std::string& tag, const Matrix& m) {
  os << tag << ' ' << m.rows() << ' ' << m.cols() << '\n';
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      if (c) os << ' ';
      os << format_double(m(r, c));
    }
    os << '\n';
  }
}

struct Reader {
  std::istream& is;

  std::string token() {
    std::string t;
    if (!(is >> t)) throw std::runtime_error("model file truncated");
    return t;
  }
  void expect(const std::string& tag) {
    const std::string t = token();
    if (t != tag)
      throw std::runtime_error("model file: expected '" + tag + "', got '" + t + "'");
  }
  long integer() {
    const std::string t = token();
    try {
      return std::stol(t);
    } catch (const std::exception&) {
      throw std::runtime_error("model file: expected integer, got '" + t + "'");
    }
  }
  double real() {
    double v;
    if (!parse_double(token(), v))
      throw std::runtime_error("model file: bad floating-point value");
    return v;
  }
  Matrix matrix(const std::string& tag) {
    expect(tag);
    const Eigen::Index rows = integer();
    const Eigen::Index cols = integer();
    Matrix m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r)
      for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = real();
    return m;
  }
};

void write_transform(std::ostream& os, const TpsTransform& t) {
  os << "kernel " << kernel_name(t.kernel.family) << '\n';
  os << "anchor_seed " << t.anchors.selection_seed << '\n';
  os << "anchor_method "
     << (t.anchors.method == AnchorMethod::KMEDOIDS ? "KMEDOIDS" : "RANDOM")
     << '\n';
  write_matrix(os, "anchors", t.anchors.points);
  write_matrix(os, "linear", t.linear);
  write_matrix(os, "weights", t.weights);
}

TpsTransform read_transform(Reader& r) {
  TpsTransform t;
  r.expect("kernel");
  t.kernel.family = kernel_family_from_name(r.token());
  r.expect("anchor_seed");
  t.anchors.selection_seed = static_cast<std::uint64_t>(r.integer());
  r.expect("anchor_method");
  t.anchors.method =
      r.token() == "KMEDOIDS" ? AnchorMethod::KMEDOIDS : AnchorMethod::RANDOM;
  t.anchors.points = r.matrix("anchors");
  t.linear = r.matrix("linear");
  t.weights = r.matrix("weights");
  return t;
}

void write_svm(std::ostream& os, const SvmModel& m) {
  os << "svm " << m.w.size() << '\n';
  for (Eigen::Index i = 0; i < m.w.size(); ++i) {
    if (i) os << ' ';
    os << format_double(m.w[i]);
  }
  os << '\n';
  os << "bias " << format_double(m.b) << '\n';
  os << "c1 " << format_double(m.c1) << '\n';
  os << "dual " << format_double(m.dual_objective) << '\n';
}

SvmModel read_svm(Reader& r) {
  SvmModel m;
  r.expect("svm");
  const Eigen::Index d = r.integer();
  m.w.resize(d);
  for (Eigen::Index i = 0; i < d; ++i) m.w[i] = r.real();
  r.expect("bias");
  m.b = r.real();
  r.expect("c1");
  m.c1 = r.real();
  r.expect("dual");
  m.dual_objective = r.real();
  return m;
}

void write_tml_svm(std::ostream& os, const TmlSvmModel& m) {
  os << "classes " << m.classes.size() << '\n';
  for (std::size_t i = 0; i < m.classes.size(); ++i) {
    if (i) os << ' ';
    os << m.classes[i];
  }
  os << '\n';
  os << "kpca " << (m.kpca ? 1 : 0) << '\n';
  if (m.kpca) {
    os << "sigma " << format_double(m.kpca->sigma) << '\n';
    write_matrix(os, "kpca_training", m.kpca->training);
    write_matrix(os, "kpca_eigenvalues", m.kpca->eigenvalues);
    write_matrix(os, "kpca_eigenvectors", m.kpca->eigenvectors);
    write_matrix(os, "kpca_row_means", m.kpca->row_means);
    os << "kpca_grand_mean " << format_double(m.kpca->grand_mean) << '\n';
  }
  os << "pairs " << m.pairs.size() << '\n';
  for (const auto& pair : m.pairs) {
    os << "pair " << pair.class_a << ' ' << pair.class_b << '\n';
    write_matrix(os, "center_mean", pair.centering.mean);
    os << "center_scale " << format_double(pair.centering.scale) << '\n';
    write_transform(os, pair.transform);
    write_svm(os, pair.svm);
  }
}

TmlSvmModel read_tml_svm(Reader& r) {
  TmlSvmModel m;
  r.expect("classes");
  const long k = r.integer();
  for (long i = 0; i < k; ++i) m.classes.push_back(static_cast<int>(r.integer()));
  r.expect("kpca");
  if (r.integer() == 1) {
    KpcaMap map;
    r.expect("sigma");
    map.sigma = r.real();
    map.training = r.matrix("kpca_training");
    map.eigenvalues = r.matrix("kpca_eigenvalues");
    map.eigenvectors = r.matrix("kpca_eigenvectors");
    map.row_means = r.matrix("kpca_row_means");
    r.expect("kpca_grand_mean");
    map.grand_mean = r.real();
    m.kpca = std::move(map);
  }
  r.expect("pairs");
  const long np = r.integer();
  for (long i = 0; i < np; ++i) {
    TmlSvmModel::PairModel pair;
    r.expect("pair");
    pair.class_a = static_cast<int>(r.integer());
    pair.class_b = static_cast<int>(r.integer());
    pair.centering.mean = r.matrix("center_mean");
    r.expect("center_scale");
    pair.centering.scale = r.real();
    pair.transform = read_transform(r);
    pair.svm = read_svm(r);
    m.pairs.push_back(std::move(pair));
  }
  return m;
}

}  // namespace

void write_model(const PersistedModel& model, std::ostream& os) {
  os << "tpsml-model 1\n";
  os << "kind " << to_string(model.kind) << '\n';
  os << "label_names " << model.label_names.size() << '\n';
  for (const auto& name : model.label_names) os << name << '\n';

  if (model.kind == ModelKind::MMC || model.kind == ModelKind::TML_NN) {
    write_matrix(os, "train_x", model.train_X);
    os << "train_labels " << model.train_labels.size() << '\n';
    for (std::size_t i = 0; i < model.train_labels.size(); ++i) {
      if (i) os << ' ';
      os << model.train_labels[i];
    }
    os << '\n';
  }
  switch (model.kind) {
    case ModelKind::MMC:
      write_matrix(os, "metric", model.metric->M);
      break;
    case ModelKind::TML_NN:
      write_transform(os, *model.transform);
      break;
    case ModelKind::TML_SVM:
    case ModelKind::KERNEL_TML_SVM:
      write_tml_svm(os, *model.svm);
      break;
  }
  os << "end\n";
}

PersistedModel read_model(std::istream& is) {
  Reader r{is};
  r.expect("tpsml-model");
  const long version = r.integer();
  if (version != 1)
    throw std::runtime_error("unsupported model schema version " +
                             std::to_string(version));
  PersistedModel model;
  r.expect("kind");
  model.kind = model_kind_from_string(r.token());
  r.expect("label_names");
  const long k = r.integer();
  for (long i = 0; i < k; ++i) model.label_names.push_back(r.token());

  if (model.kind == ModelKind::MMC || model.kind == ModelKind::TML_NN) {
    model.train_X = r.matrix("train_x");
    r.expect("train_labels");
    const long n = r.integer();
    for (long i = 0; i < n; ++i)
      model.train_labels.push_back(static_cast<int>(r.integer()));
  }
  switch (model.kind) {
    case ModelKind::MMC:
      model.metric = MahalanobisMetric{r.matrix("metric")};
      break;
    case ModelKind::TML_NN:
      model.transform = read_transform(r);
      break;
    case ModelKind::TML_SVM:
    case ModelKind::KERNEL_TML_SVM:
      model.svm = read_tml_svm(r);
      break;
  }
  r.expect("end");
  return model;
}

void save_model(const PersistedModel& model, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("save_model: cannot open " + path);
  write_model(model, out);
}

PersistedModel load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("load_model: cannot open " + path);
  return read_model(in);
}

int PersistedModel::predict(const Eigen::Ref<const Vector>& x) const {
  switch (kind) {
    case ModelKind::MMC: {
      double best = std::numeric_limits<double>::infinity();
      int best_label = 0;
      for (Eigen::Index i = 0; i < train_X.rows(); ++i) {
        const double d = mahalanobis_distance(*metric, x, train_X.row(i));
        if (d < best) {
          best = d;
          best_label = train_labels[static_cast<std::size_t>(i)];
        }
      }
      return best_label;
    }
    case ModelKind::TML_NN:
      return knn_predict(train_X, train_labels, x, 1, &*transform);
    case ModelKind::TML_SVM:
    case ModelKind::KERNEL_TML_SVM:
      return tml_svm_predict(*svm, x);
  }
  throw std::logic_error("unknown model kind");
}

KernelSpec kernel_from_name(const std::string& name, int dim, bool* from_dim) {
  if (from_dim) *from_dim = (name == "auto");
  if (name == "auto") return KernelSpec::default_for_dim(dim);
  if (name == "r2logr") return {KernelFamily::R2LOGR};
  if (name == "r1") return {KernelFamily::R1};
  if (name == "r3") return {KernelFamily::R3};
  throw std::invalid_argument("unknown kernel '" + name + "'");
}

namespace {

bool parse_bool(const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw std::invalid_argument("expected boolean, got '" + v + "'");
}

}  // namespace

void RunConfig::apply_line(const std::string& key, const std::string& value) {
  auto as_double = [&] {
    double v;
    if (!parse_double(value, v))
      throw std::invalid_argument("config: bad number for " + key);
    return v;
  };
  auto as_int = [&] { return static_cast<int>(as_double()); };

  if (key == "seed") seed = static_cast<std::uint64_t>(as_double());
  else if (key == "threads") threads = as_int();
  else if (key == "knn.k") knn_k = as_int();
  else if (key == "mmc.step") mmc_step = as_double();
  else if (key == "mmc.max_iter") mmc_max_iter = as_int();
  else if (key == "tml_nn.lambda") tml_nn_lambda = as_double();
  else if (key == "tml_nn.anchor_fraction") tml_nn_anchor_fraction = as_double();
  else if (key == "tml_nn.pair_cap") tml_nn_pair_cap = static_cast<std::size_t>(as_double());
  else if (key == "tml_nn.kernel") tml_nn_kernel = value;
  else if (key == "tml_nn.full_side_conditions") tml_nn_full_side_conditions = parse_bool(value);
  else if (key == "svm.c1") svm_c1 = as_double();
  else if (key == "tml_svm.c1") tml_svm_c1 = as_double();
  else if (key == "tml_svm.c2") tml_svm_c2 = as_double();
  else if (key == "tml_svm.anchor_fraction") tml_svm_anchor_fraction = as_double();
  else if (key == "tml_svm.max_outer") tml_svm_max_outer = as_int();
  else if (key == "tml_svm.inner_step_cap") tml_svm_inner_step_cap = as_int();
  else if (key == "tml_svm.kernel") tml_svm_kernel = value;
  else if (key == "ktml_svm.sigma") ktml_svm_sigma = as_double();
  else if (key == "ktml_svm.rank") ktml_svm_rank = as_int();
  else if (key == "bench.runs") bench_runs = as_int();
  else if (key == "bench.folds") bench_folds = as_int();
  else if (key == "bench.grid_points") bench_grid_points = as_int();
  else if (key == "bench.pair_grid_points") bench_pair_grid_points = as_int();
  else if (key == "bench.max_outer") bench_max_outer = as_int();
  else if (key == "bench.inner_step_cap") bench_inner_step_cap = as_int();
  else if (key == "bench.kpca_rank") bench_kpca_rank = as_int();
  else throw std::invalid_argument("config: unknown key '" + key + "'");
}

RunConfig RunConfig::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("config: cannot open " + path);
  RunConfig config;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    const auto begin = line.find_first_not_of(" \t\r");
    if (begin == std::string::npos) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ParseError("config: expected key=value", lineno, 1);
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
    };
    config.apply_line(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return config;
}

std::string scoreboard_csv(const std::vector<std::string>& dataset_names,
                           const std::vector<ScoreBoard>& boards) {
  std::ostringstream out;
  out << "dataset,method,mean_accuracy,std_accuracy,points\n";
  for (std::size_t d = 0; d < boards.size(); ++d) {
    const auto& b = boards[d];
    for (std::size_t m = 0; m < b.method_names.size(); ++m)
      out << dataset_names[d] << ',' << b.method_names[m] << ','
          << format_double(b.mean(m)) << ',' << format_double(b.stddev(m)) << ','
          << format_double(b.points[m]) << '\n';
  }
  return out.str();
}

std::string scoreboard_text(const std::vector<std::string>& dataset_names,
                            const std::vector<ScoreBoard>& boards) {
  std::ostringstream out;
  for (std::size_t d = 0; d < boards.size(); ++d) {
    const auto& b = boards[d];
    out << dataset_names[d] << '\n';
    for (std::size_t m = 0; m < b.method_names.size(); ++m) {
      char line[160];
      std::snprintf(line, sizeof(line), "  %-14s %6.2f +- %5.2f  (%.1f)\n",
                    b.method_names[m].c_str(), 100.0 * b.mean(m),
                    100.0 * b.stddev(m), b.points[m]);
      out << line;
    }
    for (const auto& note : b.footnotes) out << "  note: " << note << '\n';
  }
  return out.str();
}

void write_deformation_grid_svg(const TpsTransform& transform,
                                const std::string& path, int lines,
                                int samples_per_line, double extent) {
  if (transform.dim() != 2)
    throw std::invalid_argument("write_deformation_grid_svg: 2-D transforms only");
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);

  std::vector<std::vector<std::pair<double, double>>> polylines;
  double min_x = 0, max_x = 0, min_y = 0, max_y = 0;
  bool first = true;
  auto add_line = [&](bool horizontal, double fixed) {
    std::vector<std::pair<double, double>> pts;
    for (int s = 0; s < samples_per_line; ++s) {
      const double t = -extent + 2.0 * extent * s / (samples_per_line - 1);
      Vector x(2);
      x << (horizontal ? t : fixed), (horizontal ? fixed : t);
      const Vector f = apply_transform(transform, x);
      pts.emplace_back(f[0], f[1]);
      if (first) {
        min_x = max_x = f[0];
        min_y = max_y = f[1];
        first = false;
      }
      min_x = std::min(min_x, f[0]);
      max_x = std::max(max_x, f[0]);
      min_y = std::min(min_y, f[1]);
      max_y = std::max(max_y, f[1]);
    }
    polylines.push_back(std::move(pts));
  };
  for (int l = 0; l < lines; ++l) {
    const double fixed = -extent + 2.0 * extent * l / (lines - 1);
    add_line(true, fixed);
    add_line(false, fixed);
  }

  const double pad = 0.05 * std::max(max_x - min_x, max_y - min_y) + 1e-9;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\""
      << (min_x - pad) << ' ' << (min_y - pad) << ' '
      << (max_x - min_x + 2 * pad) << ' ' << (max_y - min_y + 2 * pad)
      << "\">\n";
  for (const auto& pts : polylines) {
    out << "<polyline fill=\"none\" stroke=\"black\" stroke-width=\""
        << 0.005 * (max_x - min_x + 2 * pad) << "\" points=\"";
    for (const auto& [x, y] : pts) out << x << ',' << y << ' ';
    out << "\"/>\n";
  }
  out << "</svg>\n";
}

}  // namespace tml
