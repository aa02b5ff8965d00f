// Copyright 2026 The vlfq Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// JSON reading and writing for ensembles, decompositions and reports.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "vlfq/ensemble.hpp"
#include "vlfq/error.hpp"
#include "vlfq/kidecomp.hpp"
#include "vlfq/matcore.hpp"
#include "vlfq/rates.hpp"
#include "vlfq/vlfcodec.hpp"

namespace vlfq::io {

using Json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// writer

namespace detail {

inline std::string format_double(double x) {
  if (std::isnan(x)) return "null";
  if (std::isinf(x)) return x > 0 ? "1e308" : "-1e308";
  if (x == 0.0) x = 0.0;  // drop the sign of negative zero
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline void write(std::ostream& os, const Json& j, int indent, int depth) {
  const std::string pad(static_cast<std::size_t>(indent * (depth + 1)), ' ');
  const std::string close_pad(static_cast<std::size_t>(indent * depth), ' ');
  const char* nl = indent > 0 ? "\n" : "";
  switch (j.type()) {
    case Json::value_t::object: {
      if (j.empty()) {
        os << "{}";
        return;
      }
      os << "{" << nl;
      bool first = true;
      for (const auto& [k, v] : j.items()) {
        if (!first) os << "," << nl;
        first = false;
        os << pad << Json(k).dump() << (indent > 0 ? ": " : ":");
        write(os, v, indent, depth + 1);
      }
      os << nl << close_pad << "}";
      return;
    }
    case Json::value_t::array: {
      if (j.empty()) {
        os << "[]";
        return;
      }
      // arrays of scalars stay on one line
      bool flat = true;
      for (const auto& v : j)
        if (v.is_structured() && !(v.is_array() && v.size() == 2 && v[0].is_number())) flat = false;
      if (flat) {
        os << "[";
        for (std::size_t k = 0; k < j.size(); ++k) {
          if (k) os << ", ";
          write(os, j[k], 0, 0);
        }
        os << "]";
        return;
      }
      os << "[" << nl;
      for (std::size_t k = 0; k < j.size(); ++k) {
        if (k) os << "," << nl;
        os << pad;
        write(os, j[k], indent, depth + 1);
      }
      os << nl << close_pad << "]";
      return;
    }
    case Json::value_t::number_float:
      os << format_double(j.get<double>());
      return;
    default:
      os << j.dump();
      return;
  }
}

}  // namespace detail

/// Serializes with every double printed to 17 significant digits.
inline std::string dump(const Json& j, int indent = 2) {
  std::ostringstream os;
  detail::write(os, j, indent, 0);
  os << "\n";
  return os.str();
}

// ---------------------------------------------------------------------------
// matrices

inline Json matrix_to_json(const CMatrix& m) {
  Json rows = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    Json row = Json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(Json::array({m(r, c).real(), m(r, c).imag()}));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline double number_at(const Json& j, const std::string& where) {
  if (!j.is_number()) throw Error(ErrorKind::ParseError, where + ": expected a number");
  const double x = j.get<double>();
  if (!std::isfinite(x)) throw Error(ErrorKind::ParseError, where + ": non-finite number");
  return x;
}

inline CMatrix matrix_from_json(const Json& j, Eigen::Index rows, Eigen::Index cols, const std::string& where) {
  if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != rows)
    throw Error(ErrorKind::BadShape, where + ": expected " + std::to_string(rows) + " rows");
  CMatrix m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const Json& row = j[static_cast<std::size_t>(r)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols)
      throw Error(ErrorKind::BadShape, where + ": row " + std::to_string(r) + " should have " +
                                           std::to_string(cols) + " entries");
    for (Eigen::Index c = 0; c < cols; ++c) {
      const Json& z = row[static_cast<std::size_t>(c)];
      const std::string at = where + "[" + std::to_string(r) + "][" + std::to_string(c) + "]";
      if (!z.is_array() || z.size() != 2) throw Error(ErrorKind::BadShape, at + ": expected [re, im]");
      m(r, c) = cplx(number_at(z[0], at), number_at(z[1], at));
    }
  }
  return m;
}

namespace detail {

inline void check_fields(const Json& obj, const std::set<std::string>& allowed, const std::string& where,
                         bool lenient) {
  if (!obj.is_object()) throw Error(ErrorKind::ParseError, where + ": expected an object");
  if (lenient) return;
  for (const auto& [k, v] : obj.items())
    if (!allowed.count(k)) throw Error(ErrorKind::ParseError, where + ": unknown field '" + k + "'");
}

inline const Json& field(const Json& obj, const std::string& name, const std::string& where) {
  auto it = obj.find(name);
  if (it == obj.end()) throw Error(ErrorKind::ParseError, where + ": missing field '" + name + "'");
  return *it;
}

inline std::size_t size_field(const Json& obj, const std::string& name, const std::string& where) {
  const Json& v = field(obj, name, where);
  if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0))
    throw Error(ErrorKind::ParseError, where + "." + name + ": expected a non-negative integer");
  return v.get<std::size_t>();
}

}  // namespace detail

// ---------------------------------------------------------------------------
// ensembles

inline Json ensemble_to_json(const Ensemble& e) {
  Json letters = Json::array();
  for (std::size_t i = 0; i < e.size(); ++i)
    letters.push_back({{"label", e.labels[i]}, {"prob", e.probs[i]}, {"state", matrix_to_json(e.states[i])}});
  return {{"dim", e.dim}, {"letters", std::move(letters)}};
}

/// Shape checks only; callers run validate() for the physical ones.
inline Ensemble ensemble_from_json(const Json& j, bool lenient = false) {
  detail::check_fields(j, {"dim", "letters"}, "ensemble", lenient);
  Ensemble e;
  e.dim = detail::size_field(j, "dim", "ensemble");
  if (e.dim == 0) throw Error(ErrorKind::BadShape, "ensemble.dim must be positive");
  const Json& letters = detail::field(j, "letters", "ensemble");
  if (!letters.is_array()) throw Error(ErrorKind::ParseError, "ensemble.letters: expected an array");
  if (letters.empty()) throw Error(ErrorKind::EmptyInput, "ensemble has no letters");
  const auto d = static_cast<Eigen::Index>(e.dim);
  for (std::size_t i = 0; i < letters.size(); ++i) {
    const std::string where = "letters[" + std::to_string(i) + "]";
    const Json& l = letters[i];
    detail::check_fields(l, {"label", "prob", "state"}, where, lenient);
    const Json& label = detail::field(l, "label", where);
    if (!label.is_string()) throw Error(ErrorKind::ParseError, where + ".label: expected a string");
    e.labels.push_back(label.get<std::string>());
    e.probs.push_back(number_at(detail::field(l, "prob", where), where + ".prob"));
    e.states.push_back(matrix_from_json(detail::field(l, "state", where), d, d, where + ".state"));
  }
  return e;
}

inline Json parse_text(const std::string& text) {
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::parse_error& ex) {
    throw Error(ErrorKind::ParseError, ex.what());
  }
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::IoError, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::IoError, "cannot write " + path);
  out << text;
  if (!out) throw Error(ErrorKind::IoError, "write failed for " + path);
}

inline Ensemble load_ensemble(const std::string& path, bool lenient = false) {
  return ensemble_from_json(parse_text(read_file(path)), lenient);
}

// ---------------------------------------------------------------------------
// decompositions

inline Json report_to_json(const VerificationReport& r) {
  return {{"p1_residual", r.p1_residual},
          {"p2_residual", r.p2_residual},
          {"p3_commutant_dims", r.p3_commutant_dims},
          {"isometry_residual", r.isometry_residual},
          {"passed", r.passed()}};
}

inline Json decomposition_to_json(const KIDecomposition& d) {
  Json blocks = Json::array();
  for (const auto& b : d.blocks) {
    Json rho_j = Json::array();
    for (const auto& r : b.rho_j_il) rho_j.push_back(r ? matrix_to_json(*r) : Json(nullptr));
    blocks.push_back({{"dim_j", b.dim_j},
                      {"dim_k", b.dim_k},
                      {"p_l", b.p_l},
                      {"p_il", b.p_il},
                      {"rho_j", std::move(rho_j)},
                      {"rho_j_avg", matrix_to_json(b.rho_j_avg)},
                      {"rho_k", matrix_to_json(b.rho_k)},
                      {"isometry", matrix_to_json(b.isometry)}});
  }
  return {{"dim", d.dim},
          {"support_dim", d.support_dim()},
          {"support_isometry", matrix_to_json(d.support_isometry)},
          {"blocks", std::move(blocks)},
          {"verification", report_to_json(d.report)}};
}

/// Reads an exported decomposition. The verification summary is taken as
/// stored; call verify() against the ensemble to re-check it.
inline KIDecomposition decomposition_from_json(const Json& j) {
  detail::check_fields(j, {"dim", "support_dim", "support_isometry", "blocks", "verification"}, "decomposition",
                       false);
  KIDecomposition d;
  d.dim = detail::size_field(j, "dim", "decomposition");
  const std::size_t s = detail::size_field(j, "support_dim", "decomposition");
  const auto dim = static_cast<Eigen::Index>(d.dim);
  d.support_isometry = matrix_from_json(detail::field(j, "support_isometry", "decomposition"), dim,
                                        static_cast<Eigen::Index>(s), "support_isometry");
  const Json& blocks = detail::field(j, "blocks", "decomposition");
  if (!blocks.is_array()) throw Error(ErrorKind::ParseError, "blocks: expected an array");
  for (std::size_t l = 0; l < blocks.size(); ++l) {
    const std::string where = "blocks[" + std::to_string(l) + "]";
    const Json& jb = blocks[l];
    detail::check_fields(jb, {"dim_j", "dim_k", "p_l", "p_il", "rho_j", "rho_j_avg", "rho_k", "isometry"}, where,
                         false);
    KIBlock b;
    b.dim_j = detail::size_field(jb, "dim_j", where);
    b.dim_k = detail::size_field(jb, "dim_k", where);
    const auto dj = static_cast<Eigen::Index>(b.dim_j);
    const auto dk = static_cast<Eigen::Index>(b.dim_k);
    b.p_l = number_at(detail::field(jb, "p_l", where), where + ".p_l");
    const Json& pil = detail::field(jb, "p_il", where);
    const Json& rj = detail::field(jb, "rho_j", where);
    if (!pil.is_array() || !rj.is_array() || pil.size() != rj.size())
      throw Error(ErrorKind::BadShape, where + ": p_il and rho_j must be arrays of equal length");
    for (std::size_t i = 0; i < pil.size(); ++i) {
      b.p_il.push_back(number_at(pil[i], where + ".p_il"));
      if (rj[i].is_null())
        b.rho_j_il.emplace_back(std::nullopt);
      else
        b.rho_j_il.emplace_back(matrix_from_json(rj[i], dj, dj, where + ".rho_j"));
    }
    b.rho_j_avg = matrix_from_json(detail::field(jb, "rho_j_avg", where), dj, dj, where + ".rho_j_avg");
    b.rho_k = matrix_from_json(detail::field(jb, "rho_k", where), dk, dk, where + ".rho_k");
    b.isometry = matrix_from_json(detail::field(jb, "isometry", where), dim, dj * dk, where + ".isometry");
    d.blocks.push_back(std::move(b));
  }
  const Json& v = detail::field(j, "verification", "decomposition");
  detail::check_fields(v, {"p1_residual", "p2_residual", "p3_commutant_dims", "isometry_residual", "passed"},
                       "verification", false);
  d.report.p1_residual = number_at(detail::field(v, "p1_residual", "verification"), "p1_residual");
  d.report.p2_residual = number_at(detail::field(v, "p2_residual", "verification"), "p2_residual");
  d.report.isometry_residual = number_at(detail::field(v, "isometry_residual", "verification"), "isometry_residual");
  d.report.p3_commutant_dims = detail::field(v, "p3_commutant_dims", "verification").get<std::vector<std::size_t>>();
  const bool passed = detail::field(v, "passed", "verification").get<bool>();
  d.report.p1_ok = d.report.p2_ok = d.report.p3_ok = d.report.isometry_ok = passed;
  return d;
}

// ---------------------------------------------------------------------------
// reports

inline Json block_summary(const KIDecomposition& d) {
  Json out = Json::array();
  for (const auto& b : d.blocks) out.push_back({{"dim_j", b.dim_j}, {"dim_k", b.dim_k}, {"p_l", b.p_l}});
  return out;
}

inline Json rates_to_json(const RateReport& r, const KIDecomposition& d, bool table1 = false) {
  Json j = {{"i_c", r.i_c},
            {"d_nc", r.d_nc},
            {"i_nc", r.i_nc},
            {"i_lh", r.i_lh},
            {"r_vlf_opt", r.r_vlf_opt},
            {"r_flaf_opt", r.r_flaf_opt},
            {"gap_f_af", r.gap_f_af},
            {"defect_upper", r.defect_upper},
            {"i_eff_interval", Json::array({r.i_eff_lower(), r.i_eff_upper()})},
            {"classification", std::string(to_string(r.classification))},
            {"blocks", block_summary(d)}};
  if (table1) j["rate_relation"] = {{"cell", std::string(to_string(r.classification))},
                             {"relation", std::string(rate_relation(r.classification))}};
  return j;
}

inline Json code_to_json(const PrefixCode& code) {
  Json out = Json::array();
  for (std::size_t l = 0; l < code.size(); ++l) out.push_back({{"block", l}, {"codeword", code.codewords[l]}});
  return out;
}

inline Json length_stats_to_json(const LengthStats& s) {
  Json rows = Json::array();
  for (const auto& b : s.per_block)
    rows.push_back({{"p_l", b.p_l}, {"codeword_length", b.codeword_length}, {"payload_qubits", b.payload_qubits}});
  return {{"n", s.n},
          {"expected_length", s.expected_length},
          {"per_letter_rate", s.per_letter_rate},
          {"window", Json::array({s.window_lower, s.window_upper})},
          {"per_block", std::move(rows)}};
}

}  // namespace vlfq::io
