#include "qpdrive/model_io.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <chrono>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>

#include <json.hpp>

namespace qpdrive {

using nlohmann::json;

namespace {

constexpr std::array<char, 8> kMagic = {'Q', 'P', 'D', 'R', 'I', 'V', 'E', '\0'};

template <typename T>
void put_le(std::ostream& out, T value) {
  static_assert(std::is_trivially_copyable_v<T>);
  std::array<unsigned char, sizeof(T)> bytes;
  std::memcpy(bytes.data(), &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
  out.write(reinterpret_cast<const char*>(bytes.data()), sizeof(T));
}

template <typename T>
T get_le(std::istream& in) {
  std::array<unsigned char, sizeof(T)> bytes;
  if (!in.read(reinterpret_cast<char*>(bytes.data()), sizeof(T)))
    throw InputError("model sidecar is truncated");
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
  T value;
  std::memcpy(&value, bytes.data(), sizeof(T));
  return value;
}

json vector_to_json(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Vector vector_from_json(const json& j) {
  const auto values = j.get<std::vector<double>>();
  return Eigen::Map<const Vector>(values.data(), static_cast<Index>(values.size()));
}

json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    std::vector<double> row(static_cast<std::size_t>(m.cols()));
    for (Index j = 0; j < m.cols(); ++j) row[static_cast<std::size_t>(j)] = m(i, j);
    rows.push_back(row);
  }
  return rows;
}

Matrix matrix_from_json(const json& j, Index cols_if_empty = 0) {
  const Index rows = static_cast<Index>(j.size());
  const Index cols = rows > 0 ? static_cast<Index>(j[0].size()) : cols_if_empty;
  Matrix m(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    if (static_cast<Index>(j[i].size()) != cols) throw InputError("model file: ragged matrix");
    for (Index c = 0; c < cols; ++c) m(i, c) = j[i][c].get<double>();
  }
  return m;
}

json complex_matrix_to_json(const ComplexMatrix& m) {
  json rows = json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Index c = 0; c < m.cols(); ++c) row.push_back({m(i, c).real(), m(i, c).imag()});
    rows.push_back(row);
  }
  return rows;
}

ComplexMatrix complex_matrix_from_json(const json& j) {
  const Index rows = static_cast<Index>(j.size());
  const Index cols = rows > 0 ? static_cast<Index>(j[0].size()) : 0;
  ComplexMatrix m(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index c = 0; c < cols; ++c) m(i, c) = Complex(j[i][c][0].get<double>(), j[i][c][1].get<double>());
  return m;
}

std::string timestamp_utc() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream ss;
  ss << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return ss.str();
}

std::filesystem::path sidecar_path(const std::filesystem::path& path) {
  auto p = path;
  p += ".bin";
  return p;
}

std::filesystem::path csv_sidecar_path(const std::filesystem::path& path, const std::string& name) {
  auto p = path;
  p += "." + name + ".csv";
  return p;
}

void write_matrix_csv(const std::filesystem::path& path, const Matrix& m) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write '" + path.string() + "'");
  out << m.rows() << ',' << m.cols() << '\n' << std::setprecision(17);
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index c = 0; c < m.cols(); ++c) out << (c ? "," : "") << m(i, c);
    out << '\n';
  }
}

Matrix read_matrix_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open model sidecar '" + path.string() + "'");
  std::string line;
  std::getline(in, line);
  Index rows = 0;
  Index cols = 0;
  char comma = 0;
  std::istringstream head(line);
  if (!(head >> rows >> comma >> cols)) throw InputError("malformed sidecar header in '" + path.string() + "'");
  Matrix m(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    if (!std::getline(in, line)) throw InputError("sidecar '" + path.string() + "' is truncated");
    std::istringstream row(line);
    std::string field;
    for (Index c = 0; c < cols; ++c) {
      if (!std::getline(row, field, ',')) throw InputError("sidecar '" + path.string() + "' has a short row");
      m(i, c) = std::strtod(field.c_str(), nullptr);
    }
  }
  return m;
}

} // namespace

void write_matrix_blob(const std::filesystem::path& path,
                       const std::vector<std::pair<std::string, Matrix>>& matrices) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write '" + path.string() + "'");
  out.write(kMagic.data(), kMagic.size());
  put_le<std::uint32_t>(out, kModelFormatVersion);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(matrices.size()));
  for (const auto& [name, m] : matrices) {
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    put_le<std::uint64_t>(out, static_cast<std::uint64_t>(m.rows()));
    put_le<std::uint64_t>(out, static_cast<std::uint64_t>(m.cols()));
    for (Index i = 0; i < m.rows(); ++i)
      for (Index c = 0; c < m.cols(); ++c) put_le<double>(out, m(i, c));
  }
  if (!out) throw InputError("failed writing '" + path.string() + "'");
}

std::vector<std::pair<std::string, Matrix>> read_matrix_blob(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open model sidecar '" + path.string() + "'");
  std::array<char, 8> magic{};
  if (!in.read(magic.data(), magic.size()) || magic != kMagic)
    throw InputError("'" + path.string() + "' is not a model sidecar");
  const auto version = get_le<std::uint32_t>(in);
  if (version != kModelFormatVersion)
    throw InputError("unsupported sidecar version " + std::to_string(version));
  const auto count = get_le<std::uint32_t>(in);
  std::vector<std::pair<std::string, Matrix>> out;
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto len = get_le<std::uint32_t>(in);
    std::string name(len, '\0');
    if (!in.read(name.data(), len)) throw InputError("model sidecar is truncated");
    const auto rows = static_cast<Index>(get_le<std::uint64_t>(in));
    const auto cols = static_cast<Index>(get_le<std::uint64_t>(in));
    Matrix m(rows, cols);
    for (Index r = 0; r < rows; ++r)
      for (Index c = 0; c < cols; ++c) m(r, c) = get_le<double>(in);
    out.emplace_back(std::move(name), std::move(m));
  }
  return out;
}

void save_model(const std::filesystem::path& path, const DecompositionModel& model,
                const SaveOptions& options) {
  model.check_consistency();
  const auto& freqs = model.harmonic.freqs;
  const auto& params = freqs.params;

  json doc;
  doc["meta"] = {
      {"version", kModelFormatVersion},
      {"created", timestamp_utc()},
      {"seed", model.seed},
      {"dt", model.dt()},
      {"k", model.channels()},
      {"Q", model.delays()},
      {"epsilon", model.epsilon()},
      {"prune_tau", model.prune_threshold},
      {"storage", to_string(model.storage)},
      {"svd_method", to_string(model.svd_method)},
      {"num_states", model.train.size()},
      {"num_eigs", model.basis.rank()},
      {"origin_index", model.train.origin_index},
      {"thresholds", {{"eps1", params.eps1}, {"eps2", params.eps2}, {"L0", params.L0},
                      {"drop_bin1", params.drop_bin1},
                      {"score_normalization", to_string(params.normalization)}}},
      {"sidecar", options.portable ? "csv" : "binary"},
  };
  doc["channel_stats"] = {
      {"standardized", model.standardized},
      {"mode", to_string(model.channel_stats.mode)},
      {"mean", vector_to_json(model.channel_stats.mean)},
      {"scale", vector_to_json(model.channel_stats.scale)},
      {"constant", model.channel_stats.constant},
  };
  doc["frequencies"] = {
      {"grid_size", freqs.grid_size},
      {"bins", freqs.bins},
      {"omegas", vector_to_json(freqs.omegas)},
  };
  doc["A"] = complex_matrix_to_json(model.harmonic.A);
  doc["residual_norm"] = vector_to_json(model.harmonic.residual_norm);
  doc["E"] = matrix_to_json(model.chaotic.E);
  doc["lambdas"] = vector_to_json(model.basis.lambdas);
  doc["q"] = vector_to_json(model.basis.q);
  doc["gamma_tilde_mode"] = to_string(model.evaluator.mode);
  doc["warnings"] = model.basis.warnings;

  std::ofstream out(path);
  if (!out) throw InputError("cannot write '" + path.string() + "'");
  out << doc.dump(1) << '\n';
  if (!out) throw InputError("failed writing '" + path.string() + "'");

  const std::vector<std::pair<std::string, Matrix>> blobs = {
      {"states", Matrix(model.train.states)},
      {"targets", model.targets},
      {"phis", model.basis.phis},
      {"gammas", model.basis.gammas},
      {"d", Matrix(model.basis.d)},
  };
  if (options.portable) {
    for (const auto& [name, m] : blobs) write_matrix_csv(csv_sidecar_path(path, name), m);
  } else {
    write_matrix_blob(sidecar_path(path), blobs);
  }
}

DecompositionModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open model file '" + path.string() + "'");
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw InputError("model file '" + path.string() + "' is not valid JSON: " + e.what());
  }

  try {
    const auto& meta = doc.at("meta");
    const int version = meta.at("version").get<int>();
    if (version != kModelFormatVersion)
      throw InputError("unsupported model version " + std::to_string(version));

    std::map<std::string, Matrix> blobs;
    if (meta.at("sidecar").get<std::string>() == "csv") {
      for (const char* name : {"states", "targets", "phis", "gammas", "d"})
        blobs[name] = read_matrix_csv(csv_sidecar_path(path, name));
    } else {
      for (auto& [name, m] : read_matrix_blob(sidecar_path(path))) blobs[name] = std::move(m);
    }
    auto blob = [&](const std::string& name) -> Matrix& {
      auto it = blobs.find(name);
      if (it == blobs.end()) throw InputError("model sidecar lacks matrix '" + name + "'");
      return it->second;
    };

    DecompositionModel model;
    model.seed = meta.at("seed").get<std::uint64_t>();
    model.prune_threshold = meta.at("prune_tau").get<double>();
    model.storage = meta.at("storage").get<std::string>() == "sparse" ? StorageKind::Sparse : StorageKind::Dense;
    const auto svd = meta.at("svd_method").get<std::string>();
    model.svd_method = svd == "dense" ? SvdMethod::Dense : svd == "lanczos" ? SvdMethod::Lanczos : SvdMethod::Auto;

    model.train.states = blob("states");
    model.train.delays = meta.at("Q").get<Index>();
    model.train.channels = meta.at("k").get<Index>();
    model.train.dt = meta.at("dt").get<double>();
    model.train.origin_index = meta.at("origin_index").get<Index>();
    model.targets = blob("targets");

    const auto& stats = doc.at("channel_stats");
    model.standardized = stats.at("standardized").get<bool>();
    model.channel_stats.mode = scale_mode_from_string(stats.at("mode").get<std::string>());
    model.channel_stats.mean = vector_from_json(stats.at("mean"));
    model.channel_stats.scale = vector_from_json(stats.at("scale"));
    model.channel_stats.constant = stats.at("constant").get<std::vector<bool>>();

    model.basis.lambdas = vector_from_json(doc.at("lambdas"));
    model.basis.q = vector_from_json(doc.at("q"));
    model.basis.d = blob("d").col(0);
    model.basis.phis = blob("phis");
    model.basis.gammas = blob("gammas");
    model.basis.epsilon = meta.at("epsilon").get<double>();
    model.basis.delays = model.train.delays;
    model.basis.warnings = doc.value("warnings", std::vector<std::string>{});

    const auto& f = doc.at("frequencies");
    FrequencySet freqs;
    freqs.grid_size = f.at("grid_size").get<Index>();
    freqs.bins = f.at("bins").get<std::vector<Index>>();
    freqs.omegas = vector_from_json(f.at("omegas"));
    freqs.dt = model.train.dt;
    const auto& th = meta.at("thresholds");
    freqs.params.eps1 = th.at("eps1").get<double>();
    freqs.params.eps2 = th.at("eps2").get<double>();
    freqs.params.L0 = th.at("L0").get<Index>();
    freqs.params.drop_bin1 = th.at("drop_bin1").get<bool>();
    freqs.params.normalization =
        score_normalization_from_string(th.value("score_normalization", std::string("none")));

    model.harmonic.freqs = std::move(freqs);
    model.harmonic.A = complex_matrix_from_json(doc.at("A"));
    model.harmonic.residual_norm = vector_from_json(doc.at("residual_norm"));
    model.chaotic.E = matrix_from_json(doc.at("E"), model.channels());
    model.evaluator = build_evaluator(model.basis, model.chaotic,
                                      evaluator_mode_from_string(doc.at("gamma_tilde_mode").get<std::string>()));
    model.check_consistency();
    return model;
  } catch (const json::exception& e) {
    throw InputError("model file '" + path.string() + "' is missing or has a malformed field: " + e.what());
  }
}

} // namespace qpdrive
