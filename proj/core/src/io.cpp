#include "cartanflow/io.hpp"

#include <charconv>
#include <cmath>
#include <ostream>

#include <json.hpp>

namespace cartanflow::io {

using nlohmann::json;

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

namespace {

Mat parse_matrix(const json& j, const Family& f) {
  if (!j.is_array() || j.empty())
    throw InputError("matrix must be a non-empty nested array");
  const int rows = static_cast<int>(j.size());
  const int cols = static_cast<int>(j[0].size());
  Mat m(rows, cols);
  for (int i = 0; i < rows; ++i) {
    if (!j[i].is_array() || static_cast<int>(j[i].size()) != cols)
      throw InputError("matrix rows have inconsistent lengths");
    for (int k = 0; k < cols; ++k) {
      const json& e = j[i][k];
      if (e.is_number()) {
        m(i, k) = Complex(e.get<double>(), 0.0);
      } else if (e.is_array() && e.size() == 2 && e[0].is_number() &&
                 e[1].is_number()) {
        m(i, k) = Complex(e[0].get<double>(), e[1].get<double>());
      } else {
        throw InputError("matrix entries must be numbers or [re, im] pairs");
      }
    }
  }
  if (rows != f.rows || cols != f.cols)
    throw InputError("matrix is " + std::to_string(rows) + "x" +
                     std::to_string(cols) + " but family " + to_string(f) +
                     " expects " + std::to_string(f.rows) + "x" +
                     std::to_string(f.cols));
  return m;
}

json matrix_to_json(const Mat& m, bool complex_entries) {
  json rows = json::array();
  for (int i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (int k = 0; k < m.cols(); ++k) {
      Complex v = m(i, k);
      if (complex_entries)
        row.push_back(json::array({v.real(), v.imag()}));
      else
        row.push_back(v.real());
    }
    rows.push_back(row);
  }
  return rows;
}

}  // namespace

PathSpec parse_path_spec(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw InputError(std::string("malformed JSON: ") + e.what());
  }
  if (!j.is_object()) throw InputError("path spec must be a JSON object");
  if (!j.contains("family") || !j["family"].is_string())
    throw InputError("path spec needs a \"family\" string");
  if (!j.contains("kind") || !j["kind"].is_string())
    throw InputError("path spec needs a \"kind\" string");

  PathSpec spec;
  spec.family = parse_family(j["family"].get<std::string>());
  const std::string kind = j["kind"].get<std::string>();

  if (j.contains("domain")) {
    const json& d = j["domain"];
    if (!d.is_array() || d.size() != 2 || !d[0].is_number() ||
        !d[1].is_number())
      throw InputError("\"domain\" must be [t_start, t_end]");
    spec.t_start = d[0].get<double>();
    spec.t_end = d[1].get<double>();
  }

  const json data = j.contains("data") ? j["data"] : json::object();
  if (kind == "builtin") {
    spec.kind = PathSpec::Kind::Builtin;
    if (!data.contains("name") || !data["name"].is_string())
      throw InputError("builtin path needs data.name");
    spec.builtin_name = data["name"].get<std::string>();
    PathSpec natural = builtin_spec(spec.builtin_name);
    spec.family = natural.family;
    if (!j.contains("domain")) {
      spec.t_start = natural.t_start;
      spec.t_end = natural.t_end;
    }
  } else if (kind == "trigpoly") {
    spec.kind = PathSpec::Kind::TrigPoly;
    if (data.contains("const"))
      spec.const_coeff = parse_matrix(data["const"], spec.family);
    for (const char* key : {"cos", "sin"}) {
      if (!data.contains(key)) continue;
      if (!data[key].is_array())
        throw InputError(std::string("data.") + key + " must be an array");
      for (const json& m : data[key]) {
        Mat mat = parse_matrix(m, spec.family);
        if (key[0] == 'c')
          spec.cos_coeffs.push_back(std::move(mat));
        else
          spec.sin_coeffs.push_back(std::move(mat));
      }
    }
    if (!spec.const_coeff.size() && spec.cos_coeffs.empty() &&
        spec.sin_coeffs.empty())
      throw InputError("trigpoly path has no coefficients");
  } else if (kind == "samples") {
    spec.kind = PathSpec::Kind::Samples;
    if (!data.contains("times") || !data["times"].is_array())
      throw InputError("sample path needs data.times");
    if (!data.contains("matrices") || !data["matrices"].is_array())
      throw InputError("sample path needs data.matrices");
    for (const json& t : data["times"]) {
      if (!t.is_number()) throw InputError("sample times must be numbers");
      spec.times.push_back(t.get<double>());
    }
    for (const json& m : data["matrices"])
      spec.samples.push_back(parse_matrix(m, spec.family));
    if (data.contains("derivative") && data["derivative"].is_boolean())
      spec.sample_derivative = data["derivative"].get<bool>();
    if (!j.contains("domain") && !spec.times.empty()) {
      spec.t_start = spec.times.front();
      spec.t_end = spec.times.back();
    }
  } else {
    throw InputError("unknown path kind: " + kind);
  }
  spec.validate();
  return spec;
}

std::string path_spec_to_json(const PathSpec& spec) {
  const bool cx = !spec.family.is_real();
  json j;
  j["family"] = to_string(spec.family);
  j["domain"] = json::array({spec.t_start, spec.t_end});
  switch (spec.kind) {
    case PathSpec::Kind::Builtin:
      j["kind"] = "builtin";
      j["data"] = {{"name", spec.builtin_name}};
      break;
    case PathSpec::Kind::TrigPoly: {
      j["kind"] = "trigpoly";
      json data = json::object();
      if (spec.const_coeff.size())
        data["const"] = matrix_to_json(spec.const_coeff, cx);
      json cosj = json::array(), sinj = json::array();
      for (const Mat& m : spec.cos_coeffs) cosj.push_back(matrix_to_json(m, cx));
      for (const Mat& m : spec.sin_coeffs) sinj.push_back(matrix_to_json(m, cx));
      if (!cosj.empty()) data["cos"] = cosj;
      if (!sinj.empty()) data["sin"] = sinj;
      j["data"] = data;
      break;
    }
    case PathSpec::Kind::Samples: {
      j["kind"] = "samples";
      json data;
      data["times"] = spec.times;
      json mats = json::array();
      for (const Mat& m : spec.samples) mats.push_back(matrix_to_json(m, cx));
      data["matrices"] = mats;
      if (!spec.sample_derivative) data["derivative"] = false;
      j["data"] = data;
      break;
    }
  }
  return j.dump(2);
}

// --- curve output ----------------------------------------------------------------

namespace {

void append_u_columns(std::vector<std::string>& cols, const Family& f) {
  const bool cx = !f.is_real();
  auto block = [&](const char* prefix, int rows, int cols_n) {
    for (int c = 0; c < cols_n; ++c)
      for (int r = 0; r < rows; ++r) {
        std::string base =
            std::string(prefix) + std::to_string(r) + "_" + std::to_string(c);
        if (cx) {
          cols.push_back(base + "_re");
          cols.push_back(base + "_im");
        } else {
          cols.push_back(base);
        }
      }
  };
  if (f.is_svd()) {
    block("ul_", f.rows, f.rows);
    block("ur_", f.cols, f.cols);
  } else {
    block("u_", f.rows, f.rows);
  }
}

void append_u_values(std::vector<std::string>& out, const KElement& u) {
  const bool cx = !u.family.is_real();
  auto block = [&](const Mat& m) {
    for (int c = 0; c < m.cols(); ++c)
      for (int r = 0; r < m.rows(); ++r) {
        out.push_back(format_double(m(r, c).real()));
        if (cx) out.push_back(format_double(m(r, c).imag()));
      }
  };
  block(u.left);
  if (u.family.is_svd()) block(u.right);
}

json u_to_json(const KElement& u) {
  const bool cx = !u.family.is_real();
  if (u.family.is_svd())
    return json::array(
        {matrix_to_json(u.left, cx), matrix_to_json(u.right, cx)});
  return matrix_to_json(u.left, cx);
}

}  // namespace

void write_path(std::ostream& os, const DiagonalizedPath& path,
                OutputFormat format) {
  const int n = static_cast<int>(path.times.size());
  const int r = path.family.a_dim();
  const bool has_lift = !path.lambda_lift.empty();
  const bool has_mu = !path.mu.empty();
  const bool has_u = !path.u.empty();

  double max_offdiag = 0.0, max_group = 0.0;
  for (double v : path.residual_offdiag) max_offdiag = std::max(max_offdiag, v);
  for (double v : path.residual_group) max_group = std::max(max_group, v);

  if (format == OutputFormat::Json) {
    json j;
    j["version"] = "cartanflow v1";
    j["family"] = to_string(path.family);
    j["t"] = path.times;
    auto vecs = [&](const std::vector<Vec>& vs) {
      json arr = json::array();
      for (const Vec& v : vs) {
        json row = json::array();
        for (int i = 0; i < v.size(); ++i) row.push_back(v[i]);
        arr.push_back(row);
      }
      return arr;
    };
    j["lambda_sorted"] = vecs(path.lambda_sorted);
    if (has_lift) j["lambda_lift"] = vecs(path.lambda_lift);
    if (has_mu) j["mu"] = vecs(path.mu);
    json faces = json::array();
    for (const auto& f : path.face) faces.push_back(f.hash);
    j["face"] = faces;
    j["residual_offdiag"] = path.residual_offdiag;
    j["residual_group"] = path.residual_group;
    if (has_u) {
      json us = json::array();
      for (const KElement& u : path.u) us.push_back(u_to_json(u));
      j["u"] = us;
    }
    if (!path.failed.empty()) j["failed_samples"] = path.failed;
    if (path.ae_match_fraction >= 0)
      j["ae_match_fraction"] = path.ae_match_fraction;
    j["max_residual_offdiag"] = max_offdiag;
    j["max_residual_group"] = max_group;
    os << j.dump(2) << "\n";
    return;
  }

  os << "# cartanflow v1\n";
  std::vector<std::string> cols{"t"};
  for (int i = 1; i <= r; ++i) cols.push_back("lambda_" + std::to_string(i));
  cols.push_back("face");
  cols.push_back("residual_offdiag");
  cols.push_back("residual_group");
  if (has_lift)
    for (int i = 1; i <= r; ++i) cols.push_back("lift_" + std::to_string(i));
  if (has_mu)
    for (int i = 1; i <= r; ++i) cols.push_back("mu_" + std::to_string(i));
  if (has_u) append_u_columns(cols, path.family);
  for (size_t i = 0; i < cols.size(); ++i)
    os << cols[i] << (i + 1 < cols.size() ? "," : "\n");

  for (int s = 0; s < n; ++s) {
    std::vector<std::string> row;
    row.push_back(format_double(path.times[s]));
    const bool failed =
        std::find(path.failed.begin(), path.failed.end(), s) != path.failed.end();
    for (int i = 0; i < r; ++i)
      row.push_back(format_double(path.lambda_sorted[s][i]));
    row.push_back(failed ? "!failed" : path.face[s].hash);
    row.push_back(format_double(path.residual_offdiag[s]));
    row.push_back(format_double(path.residual_group[s]));
    if (has_lift)
      for (int i = 0; i < r; ++i)
        row.push_back(format_double(path.lambda_lift[s][i]));
    if (has_mu)
      for (int i = 0; i < r; ++i) row.push_back(format_double(path.mu[s][i]));
    if (has_u) append_u_values(row, path.u[s]);
    for (size_t i = 0; i < row.size(); ++i)
      os << row[i] << (i + 1 < row.size() ? "," : "\n");
  }

  os << "# max_residual_offdiag=" << format_double(max_offdiag) << "\n";
  os << "# max_residual_group=" << format_double(max_group) << "\n";
  if (path.ae_match_fraction >= 0)
    os << "# ae_match_fraction=" << format_double(path.ae_match_fraction)
       << "\n";
  if (path.match_ambiguous > 0)
    os << "# match_ambiguous=" << path.match_ambiguous << "\n";
}

}  // namespace cartanflow::io
