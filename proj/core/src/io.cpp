#include "cdrpipe/io.hpp"

#include "cdrpipe/errors.hpp"

#include <array>
#include <bit>
#include <charconv>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <vector>

namespace cdr::io {

namespace {

constexpr std::array<char, 4> kSnapshotMagic{'C', 'D', 'R', '1'};
constexpr std::array<char, 4> kBlobMagic{'C', 'D', 'R', 'B'};

template <class T>
void put_le(std::ostream& out, T value) {
  static_assert(std::is_integral_v<T>);
  std::array<char, sizeof(T)> bytes;
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    bytes[i] = static_cast<char>((static_cast<std::uint64_t>(value) >> (8 * i)) & 0xFF);
  }
  out.write(bytes.data(), bytes.size());
}

template <class T>
T get_le(std::istream& in) {
  std::array<unsigned char, sizeof(T)> bytes;
  in.read(reinterpret_cast<char*>(bytes.data()), bytes.size());
  if (!in) throw FormatError("unexpected end of file");
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
  return static_cast<T>(v);
}

void put_doubles(std::ostream& out, const double* data, std::size_t count) {
  if constexpr (std::endian::native == std::endian::little) {
    out.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(count * sizeof(double)));
  } else {
    for (std::size_t i = 0; i < count; ++i) put_le(out, std::bit_cast<std::uint64_t>(data[i]));
  }
}

void get_doubles(std::istream& in, double* data, std::size_t count) {
  if constexpr (std::endian::native == std::endian::little) {
    in.read(reinterpret_cast<char*>(data), static_cast<std::streamsize>(count * sizeof(double)));
    if (!in) throw FormatError("unexpected end of file in payload");
  } else {
    for (std::size_t i = 0; i < count; ++i) data[i] = std::bit_cast<double>(get_le<std::uint64_t>(in));
  }
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open '" + path.string() + "' for writing");
  return out;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path.string() + "' for reading");
  return in;
}

void check_magic(std::istream& in, const std::array<char, 4>& magic, const std::string& what) {
  std::array<char, 4> got{};
  in.read(got.data(), got.size());
  if (!in || got != magic) throw FormatError("not a " + what + " file (bad magic)");
  const auto version = get_le<std::uint32_t>(in);
  if (version != kFormatVersion) {
    throw FormatError(what + " version " + std::to_string(version) + " is not supported");
  }
}

std::string format_double(double v) {
  std::array<char, 32> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

double parse_double(std::string_view s) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw FormatError("cannot parse number '" + std::string(s) + "'");
  }
  return v;
}

// Cap reads at 2^31 entries so a corrupt header cannot trigger a huge allocation.
void check_size(std::uint64_t rows, std::uint64_t cols) {
  if (rows > (1ULL << 31) || cols > (1ULL << 31) || rows * cols > (1ULL << 31)) {
    throw FormatError("matrix dimensions in file are implausible");
  }
}

Eigen::MatrixXd row_of(const std::vector<Eigen::Index>& values) {
  Eigen::MatrixXd m(1, static_cast<Eigen::Index>(values.size()));
  for (std::size_t i = 0; i < values.size(); ++i) m(0, static_cast<Eigen::Index>(i)) = static_cast<double>(values[i]);
  return m;
}

}  // namespace

void write_snapshots(const std::filesystem::path& path,
                     const Eigen::Ref<const Eigen::MatrixXd>& states) {
  if (states.cols() < 1) throw std::invalid_argument("snapshot container needs at least one column");
  auto out = open_out(path);
  out.write(kSnapshotMagic.data(), kSnapshotMagic.size());
  put_le<std::uint32_t>(out, kFormatVersion);
  put_le<std::uint64_t>(out, static_cast<std::uint64_t>(states.rows()));
  put_le<std::uint64_t>(out, static_cast<std::uint64_t>(states.cols() - 1));
  const Eigen::MatrixXd dense = states;  // ensure contiguous column-major storage
  put_doubles(out, dense.data(), static_cast<std::size_t>(dense.size()));
  if (!out) throw Error("write failed for '" + path.string() + "'");
}

Eigen::MatrixXd read_snapshots(const std::filesystem::path& path) {
  auto in = open_in(path);
  check_magic(in, kSnapshotMagic, "snapshot");
  const auto rows = get_le<std::uint64_t>(in);
  const auto steps = get_le<std::uint64_t>(in);
  check_size(rows, steps + 1);
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(steps + 1));
  get_doubles(in, m.data(), static_cast<std::size_t>(m.size()));
  return m;
}

void write_qoi_csv(const std::filesystem::path& path, const Eigen::VectorXd& times,
                   const Eigen::VectorXd& values) {
  if (times.size() != values.size()) throw DimensionError("qoi csv: time and value lengths differ");
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot open '" + path.string() + "' for writing");
  out << "t,f\n";
  for (Eigen::Index i = 0; i < times.size(); ++i) {
    out << format_double(times(i)) << ',' << format_double(values(i)) << '\n';
  }
  if (!out) throw Error("write failed for '" + path.string() + "'");
}

Eigen::MatrixX2d read_qoi_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path.string() + "' for reading");
  std::string line;
  if (!std::getline(in, line) || line != "t,f") throw FormatError("qoi csv: missing 't,f' header");
  std::vector<std::array<double, 2>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw FormatError("qoi csv: malformed row '" + line + "'");
    rows.push_back({parse_double(std::string_view(line).substr(0, comma)),
                    parse_double(std::string_view(line).substr(comma + 1))});
  }
  Eigen::MatrixX2d m(static_cast<Eigen::Index>(rows.size()), 2);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    m(static_cast<Eigen::Index>(i), 0) = rows[i][0];
    m(static_cast<Eigen::Index>(i), 1) = rows[i][1];
  }
  return m;
}

void write_singular_values_csv(const std::filesystem::path& path, const Eigen::VectorXd& sigma) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot open '" + path.string() + "' for writing");
  out << "index,sigma\n";
  for (Eigen::Index i = 0; i < sigma.size(); ++i) out << i << ',' << format_double(sigma(i)) << '\n';
}

void Blob::put(const std::string& name, Eigen::MatrixXd value) {
  texts_.erase(name);
  matrices_[name] = std::move(value);
}

void Blob::put(const std::string& name, std::string value) {
  matrices_.erase(name);
  texts_[name] = std::move(value);
}

void Blob::put_scalar(const std::string& name, double value) {
  put(name, Eigen::MatrixXd::Constant(1, 1, value));
}

const Eigen::MatrixXd& Blob::matrix(const std::string& name) const {
  const auto it = matrices_.find(name);
  if (it == matrices_.end()) throw FormatError("blob has no matrix entry '" + name + "'");
  return it->second;
}

const std::string& Blob::text(const std::string& name) const {
  const auto it = texts_.find(name);
  if (it == texts_.end()) throw FormatError("blob has no text entry '" + name + "'");
  return it->second;
}

double Blob::scalar(const std::string& name) const {
  const auto& m = matrix(name);
  if (m.size() != 1) throw FormatError("blob entry '" + name + "' is not a scalar");
  return m(0, 0);
}

Eigen::VectorXd Blob::vector(const std::string& name) const {
  const auto& m = matrix(name);
  return Eigen::Map<const Eigen::VectorXd>(m.data(), m.size());
}

bool Blob::has(const std::string& name) const {
  return matrices_.count(name) > 0 || texts_.count(name) > 0;
}

void Blob::write(const std::filesystem::path& path) const {
  auto out = open_out(path);
  out.write(kBlobMagic.data(), kBlobMagic.size());
  put_le<std::uint32_t>(out, kFormatVersion);
  put_le<std::uint64_t>(out, matrices_.size() + texts_.size());
  for (const auto& [name, m] : matrices_) {
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    put_le<std::uint8_t>(out, 0);
    put_le<std::uint64_t>(out, static_cast<std::uint64_t>(m.rows()));
    put_le<std::uint64_t>(out, static_cast<std::uint64_t>(m.cols()));
    put_doubles(out, m.data(), static_cast<std::size_t>(m.size()));
  }
  for (const auto& [name, t] : texts_) {
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    put_le<std::uint8_t>(out, 1);
    put_le<std::uint64_t>(out, t.size());
    out.write(t.data(), static_cast<std::streamsize>(t.size()));
  }
  if (!out) throw Error("write failed for '" + path.string() + "'");
}

Blob Blob::read(const std::filesystem::path& path) {
  auto in = open_in(path);
  check_magic(in, kBlobMagic, "blob");
  const auto count = get_le<std::uint64_t>(in);
  if (count > (1u << 20)) throw FormatError("blob entry count is implausible");
  Blob blob;
  for (std::uint64_t e = 0; e < count; ++e) {
    const auto len = get_le<std::uint32_t>(in);
    if (len > 4096) throw FormatError("blob entry name too long");
    std::string name(len, '\0');
    in.read(name.data(), len);
    const auto kind = get_le<std::uint8_t>(in);
    if (kind == 0) {
      const auto rows = get_le<std::uint64_t>(in);
      const auto cols = get_le<std::uint64_t>(in);
      check_size(rows, cols);
      Eigen::MatrixXd m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
      get_doubles(in, m.data(), static_cast<std::size_t>(m.size()));
      blob.put(name, std::move(m));
    } else if (kind == 1) {
      const auto size = get_le<std::uint64_t>(in);
      if (size > (1ULL << 30)) throw FormatError("blob text entry too long");
      std::string t(size, '\0');
      in.read(t.data(), static_cast<std::streamsize>(size));
      if (!in) throw FormatError("unexpected end of file in text entry");
      blob.put(name, std::move(t));
    } else {
      throw FormatError("blob entry '" + name + "' has unknown kind");
    }
  }
  return blob;
}

Blob to_blob(const ReducedOperatorSet& red) {
  Blob b;
  b.put("kind", std::string("reduced_model"));
  b.put("mass_r", red.mass_r);
  b.put("a_diff_r", red.a_diff_r);
  b.put("a_conv_r", red.a_conv_r);
  b.put("a_reac_r", red.a_reac_r);
  b.put("rhs_diff_r", Eigen::MatrixXd(red.rhs_diff_r));
  b.put("rhs_conv_r", Eigen::MatrixXd(red.rhs_conv_r));
  b.put("rhs_reac_r", Eigen::MatrixXd(red.rhs_reac_r));
  b.put("qoi_r", Eigen::MatrixXd(red.qoi_r));
  b.put("initial_r", Eigen::MatrixXd(red.initial_r));
  b.put_scalar("qoi_lift_offset", red.qoi_lift_offset);
  b.put("basis_ref", red.basis_ref);
  return b;
}

ReducedOperatorSet reduced_from_blob(const Blob& b) {
  if (b.text("kind") != "reduced_model") throw FormatError("blob does not hold a reduced model");
  ReducedOperatorSet red;
  red.mass_r = b.matrix("mass_r");
  red.a_diff_r = b.matrix("a_diff_r");
  red.a_conv_r = b.matrix("a_conv_r");
  red.a_reac_r = b.matrix("a_reac_r");
  red.rhs_diff_r = b.vector("rhs_diff_r");
  red.rhs_conv_r = b.vector("rhs_conv_r");
  red.rhs_reac_r = b.vector("rhs_reac_r");
  red.qoi_r = b.vector("qoi_r");
  red.initial_r = b.vector("initial_r");
  red.qoi_lift_offset = b.scalar("qoi_lift_offset");
  red.basis_ref = b.text("basis_ref");
  const Eigen::Index n = red.mass_r.rows();
  for (const auto* m : {&red.mass_r, &red.a_diff_r, &red.a_conv_r, &red.a_reac_r}) {
    if (m->rows() != n || m->cols() != n) throw FormatError("reduced model matrices disagree in size");
  }
  for (const auto* v : {&red.rhs_diff_r, &red.rhs_conv_r, &red.rhs_reac_r, &red.qoi_r, &red.initial_r}) {
    if (v->size() != n) throw FormatError("reduced model vectors disagree in size");
  }
  return red;
}

Blob to_blob(const KernelModel& model) {
  Blob b;
  b.put("kind", std::string("kernel_model"));
  b.put("centers", Eigen::MatrixXd(model.centers));
  b.put("coefficients", model.coefficients);
  b.put("newton_factor", model.newton_factor);
  b.put_scalar("d_out", static_cast<double>(model.d_out));
  b.put_scalar("shape_gamma", model.config.shape_gamma);
  b.put_scalar("lambda_reg", model.config.lambda_reg);
  b.put_scalar("max_points", model.config.max_points);
  b.put_scalar("greedy_tol_rel", model.config.greedy_tol_rel);
  b.put_scalar("output_tol", model.config.output_tol);
  b.put("output_basis", model.output_basis);
  const auto& box = model.config.normalization.box;
  Eigen::MatrixXd bounds(1, 4);
  bounds << box.lower.da, box.lower.pe, box.upper.da, box.upper.pe;
  b.put("normalization_box", bounds);
  b.put("selected", row_of(model.selected));
  b.put("residual_history",
        Eigen::MatrixXd(Eigen::Map<const Eigen::RowVectorXd>(model.residual_history.data(),
                                                              static_cast<Eigen::Index>(model.residual_history.size()))));
  b.put("stop_reason", to_string(model.stop_reason));
  b.put_scalar("breakdown", model.breakdown ? 1.0 : 0.0);
  return b;
}

KernelModel kernel_from_blob(const Blob& b) {
  if (b.text("kind") != "kernel_model") throw FormatError("blob does not hold a kernel model");
  KernelModel model;
  const Eigen::MatrixXd centers = b.matrix("centers");
  if (centers.cols() != 2 && centers.size() != 0) throw FormatError("kernel centers must have 2 columns");
  model.centers = centers;
  model.coefficients = b.matrix("coefficients");
  model.newton_factor = b.matrix("newton_factor");
  model.d_out = static_cast<Eigen::Index>(b.scalar("d_out"));
  model.config.shape_gamma = b.scalar("shape_gamma");
  model.config.lambda_reg = b.scalar("lambda_reg");
  model.config.max_points = static_cast<int>(b.scalar("max_points"));
  model.config.greedy_tol_rel = b.scalar("greedy_tol_rel");
  model.config.output_tol = b.scalar("output_tol");
  model.output_basis = b.matrix("output_basis");
  const Eigen::MatrixXd bounds = b.matrix("normalization_box");
  if (bounds.size() != 4) throw FormatError("kernel normalization box must have 4 entries");
  model.config.normalization.box = ParameterDomain({bounds(0), bounds(1)}, {bounds(2), bounds(3)});
  const Eigen::VectorXd sel = b.vector("selected");
  for (Eigen::Index i = 0; i < sel.size(); ++i) model.selected.push_back(static_cast<Eigen::Index>(sel(i)));
  const Eigen::VectorXd hist = b.vector("residual_history");
  model.residual_history.assign(hist.data(), hist.data() + hist.size());
  const std::string& reason = b.text("stop_reason");
  bool known = false;
  for (auto r : {StopReason::kMaxPoints, StopReason::kTolerance, StopReason::kPowerFloor, StopReason::kExhausted}) {
    if (to_string(r) == reason) {
      model.stop_reason = r;
      known = true;
    }
  }
  if (!known) throw FormatError("unknown kernel stop reason '" + reason + "'");
  model.breakdown = b.scalar("breakdown") != 0.0;
  const Eigen::Index n = model.centers.rows();
  const Eigen::Index width = model.output_basis.size() == 0 ? model.d_out : model.output_basis.cols();
  if (model.output_basis.size() != 0 && model.output_basis.rows() != model.d_out) {
    throw FormatError("kernel output basis has the wrong length");
  }
  if (model.coefficients.rows() != n || model.coefficients.cols() != width ||
      model.newton_factor.rows() != n || model.newton_factor.cols() != n) {
    throw FormatError("kernel model arrays disagree in size");
  }
  return model;
}

Blob to_blob(const AffineOperatorSet& ops) {
  const auto bands = [](const Tridiagonal& t) {
    const Eigen::Index n = t.size();
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, 3);
    m.col(1) = t.diag();
    m.col(0).tail(n - 1) = t.lower();
    m.col(2).head(n - 1) = t.upper();
    return m;
  };
  Blob b;
  b.put("kind", std::string("affine_operators"));
  b.put_scalar("num_intervals", ops.grid.num_intervals());
  b.put("mass", bands(ops.mass));
  b.put("a_diff", bands(ops.a_diff));
  b.put("a_conv", bands(ops.a_conv));
  b.put("a_reac", bands(ops.a_reac));
  b.put("h1_product", bands(ops.h1_product));
  b.put("rhs_diff", Eigen::MatrixXd(ops.rhs_diff));
  b.put("rhs_conv", Eigen::MatrixXd(ops.rhs_conv));
  b.put("rhs_reac", Eigen::MatrixXd(ops.rhs_reac));
  b.put("qoi_vector", Eigen::MatrixXd(ops.qoi_vector));
  b.put("lift", Eigen::MatrixXd(ops.lift));
  b.put("dirichlet_dofs", row_of(ops.dirichlet_dofs));
  return b;
}

Blob to_blob(const ReducedBasis& basis) {
  Blob b;
  b.put("kind", std::string("reduced_basis"));
  b.put("basis", basis.basis);
  b.put("singular_values", Eigen::MatrixXd(basis.singular_values));
  b.put_scalar("tolerance", basis.tolerance);
  b.put("product", basis.product_name);
  b.put("error_mode", to_string(basis.error_mode));
  return b;
}

ReducedBasis basis_from_blob(const Blob& b) {
  if (b.text("kind") != "reduced_basis") throw FormatError("blob does not hold a reduced basis");
  ReducedBasis rb;
  rb.basis = b.matrix("basis");
  rb.singular_values = b.vector("singular_values");
  rb.tolerance = b.scalar("tolerance");
  rb.product_name = b.text("product");
  rb.error_mode = pod_error_mode_from_string(b.text("error_mode"));
  if (rb.singular_values.size() != rb.basis.cols()) {
    throw FormatError("basis and singular value counts differ");
  }
  return rb;
}

void write_basis(const std::filesystem::path& path, const ReducedBasis& basis) {
  write_snapshots(path, basis.basis);
  auto sv = path;
  sv.replace_filename(path.stem().string() + "_sv.csv");
  write_singular_values_csv(sv, basis.singular_values);
}

}  // namespace cdr::io
