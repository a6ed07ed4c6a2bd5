// Copyright 2026 The chi2mech Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Scenario files, report serialization and the four subcommands of the
// chi2mech tool. Kept in a header so the commands can be driven in-process
// by tests; tools/chi2mech.cpp only adds argument parsing and I/O.
//
// Matrices in scenario files are row-major with rows indexing the output
// symbol, so "leakage": [[0.25, 0.4], [0.75, 0.6]] is P(X=x|Y=y) with x the
// row and y the column.

#ifndef CHI2MECH_CLI_HPP_
#define CHI2MECH_CLI_HPP_

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "chi2mech/adversary.hpp"
#include "chi2mech/designer.hpp"
#include "chi2mech/error.hpp"
#include "chi2mech/mechanism.hpp"
#include "chi2mech/oracle.hpp"
#include "chi2mech/probcore.hpp"
#include "chi2mech/provider.hpp"

namespace chi2mech::cli {

using nlohmann::json;

inline constexpr int kSchemaVersion = 1;

inline int ExitCodeFor(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument:
      return 1;
    case ErrorCode::kInfeasibleEpsilon:
      return 2;
    case ErrorCode::kNumerical:
      return 3;
    case ErrorCode::kInternal:
      return 4;
  }
  return 4;
}

struct OracleSettings {
  int resolution = 2000;
  int refine_levels = 3;
  std::int64_t samples = 20000;
  std::uint64_t seed = 1;
};

enum class ScenarioKind { kBase, kAdversary, kProvider };

inline std::string ToString(ScenarioKind kind) {
  switch (kind) {
    case ScenarioKind::kBase:
      return "base";
    case ScenarioKind::kAdversary:
      return "adversary";
    case ScenarioKind::kProvider:
      return "provider";
  }
  return "base";
}

struct Scenario {
  int schema_version = kSchemaVersion;
  ScenarioKind kind = ScenarioKind::kBase;
  std::string name;
  // base and adversary
  std::optional<ChannelMatrix> leakage;
  std::optional<ProbVector> py;
  // Binary symmetric leakage with these crossover probabilities, in place of
  // an explicit leakage matrix.
  std::vector<double> bsc_alphas;
  // adversary
  std::optional<ChannelMatrix> channel;
  // provider
  std::optional<ProbVector> px;
  std::optional<ChannelMatrix> p_y_given_x;
  std::optional<ChannelMatrix> p_z_given_x;
  std::optional<double> epsilon;
  std::optional<std::vector<double>> sweep;
  BudgetConvention budget = BudgetConvention::kEpsSquared;
  bool budget_given = false;
  OracleSettings oracle;
};

namespace internal {

[[noreturn]] inline void FieldError(const std::string& path, const std::string& what) {
  Fail(ErrorCode::kInvalidArgument, path + ": " + what);
}

inline double Number(const json& j, const std::string& path) {
  if (!j.is_number()) FieldError(path, "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) FieldError(path, "expected a finite number");
  return v;
}

inline std::int64_t Integer(const json& j, const std::string& path) {
  if (!j.is_number_integer()) FieldError(path, "expected an integer");
  return j.get<std::int64_t>();
}

inline std::vector<double> NumberList(const json& j, const std::string& path) {
  if (!j.is_array()) FieldError(path, "expected an array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    out.push_back(Number(j[i], path + "[" + std::to_string(i) + "]"));
  }
  return out;
}

inline std::vector<std::vector<double>> Matrix(const json& j, const std::string& path) {
  if (!j.is_array() || j.empty()) FieldError(path, "expected a non-empty array of rows");
  std::vector<std::vector<double>> rows;
  for (std::size_t r = 0; r < j.size(); ++r) {
    const std::string row_path = path + "[" + std::to_string(r) + "]";
    rows.push_back(NumberList(j[r], row_path));
    if (rows.back().size() != rows.front().size()) {
      FieldError(row_path, "has " + std::to_string(rows.back().size()) + " entries, expected " +
                               std::to_string(rows.front().size()));
    }
  }
  if (rows.front().empty()) FieldError(path, "rows are empty");
  return rows;
}

// Runs a validating constructor, prefixing its message with the field path.
template <typename F>
auto AtField(const std::string& path, F&& make) -> decltype(make()) {
  try {
    return make();
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kInvalidArgument) FieldError(path, e.what());
    throw;
  }
}

inline ChannelMatrix Channel(const json& doc, const std::string& key) {
  const std::string path = "$." + key;
  const auto rows = Matrix(doc.at(key), path);
  return AtField(path, [&] { return ChannelMatrix::FromRows(rows); });
}

inline ProbVector Distribution(const json& doc, const std::string& key, Support support) {
  const std::string path = "$." + key;
  const auto values = NumberList(doc.at(key), path);
  return AtField(path, [&] { return ProbVector::FromStd(values, support); });
}

// {start, stop, steps, scale} or {values: [...]}.
inline std::vector<double> Range(const json& j, const std::string& path) {
  if (j.is_array()) return NumberList(j, path);
  if (!j.is_object()) FieldError(path, "expected an object or an array");
  if (j.contains("values")) return NumberList(j["values"], path + ".values");
  for (const char* key : {"start", "stop", "steps"}) {
    if (!j.contains(key)) FieldError(path, std::string("missing field \"") + key + "\"");
  }
  const double start = Number(j["start"], path + ".start");
  const double stop = Number(j["stop"], path + ".stop");
  const std::int64_t steps = Integer(j["steps"], path + ".steps");
  if (steps <= 0) FieldError(path + ".steps", "must be a positive integer");
  const std::string scale = j.value("scale", std::string("linear"));
  std::vector<double> out;
  if (scale == "linear") {
    for (std::int64_t i = 0; i < steps; ++i) {
      out.push_back(steps == 1 ? start
                               : start + (stop - start) * static_cast<double>(i) /
                                             static_cast<double>(steps - 1));
    }
  } else if (scale == "log") {
    if (!(start > 0.0 && stop > 0.0)) FieldError(path, "log scale needs positive start and stop");
    for (std::int64_t i = 0; i < steps; ++i) {
      const double t = steps == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(steps - 1);
      out.push_back(std::exp(std::log(start) + t * (std::log(stop) - std::log(start))));
    }
  } else {
    FieldError(path + ".scale", "expected \"linear\" or \"log\"");
  }
  return out;
}

inline BudgetConvention ParseBudget(const std::string& text, const std::string& path) {
  if (text == "eps2") return BudgetConvention::kEpsSquared;
  if (text == "half-eps2") return BudgetConvention::kHalfEpsSquared;
  FieldError(path, "expected \"eps2\" or \"half-eps2\"");
}

}  // namespace internal

inline ChannelMatrix BscLeakage(double alpha) {
  Require(alpha >= 0.0 && alpha <= 1.0, ErrorCode::kInvalidArgument,
          "bsc crossover must lie in [0, 1]");
  return ChannelMatrix::FromRows({{1.0 - alpha, alpha}, {alpha, 1.0 - alpha}});
}

inline BudgetConvention ParseBudget(const std::string& text) {
  return internal::ParseBudget(text, "--budget");
}

inline Scenario ParseScenario(const json& doc) {
  using namespace internal;
  if (!doc.is_object()) FieldError("$", "scenario must be a JSON object");
  Scenario s;
  if (!doc.contains("schema_version")) FieldError("$", "missing field \"schema_version\"");
  s.schema_version = static_cast<int>(Integer(doc["schema_version"], "$.schema_version"));
  if (s.schema_version != kSchemaVersion) {
    FieldError("$.schema_version", "unsupported version " + std::to_string(s.schema_version));
  }
  if (!doc.contains("kind") || !doc["kind"].is_string()) {
    FieldError("$.kind", "expected \"base\", \"adversary\" or \"provider\"");
  }
  const std::string kind = doc["kind"].get<std::string>();
  if (kind == "base") {
    s.kind = ScenarioKind::kBase;
  } else if (kind == "adversary") {
    s.kind = ScenarioKind::kAdversary;
  } else if (kind == "provider") {
    s.kind = ScenarioKind::kProvider;
  } else {
    FieldError("$.kind", "expected \"base\", \"adversary\" or \"provider\", got \"" + kind + "\"");
  }
  if (doc.contains("name") && doc["name"].is_string()) s.name = doc["name"].get<std::string>();

  const auto need = [&doc](const char* key) {
    if (!doc.contains(key)) FieldError("$", std::string("missing field \"") + key + "\"");
  };
  if (s.kind == ScenarioKind::kProvider) {
    need("p_x");
    need("p_y_given_x");
    need("p_z_given_x");
    s.px = Distribution(doc, "p_x", Support::kStrictlyPositive);
    s.p_y_given_x = Channel(doc, "p_y_given_x");
    s.p_z_given_x = Channel(doc, "p_z_given_x");
  } else {
    need("p_y");
    s.py = Distribution(doc, "p_y", Support::kStrictlyPositive);
    if (doc.contains("bsc")) {
      if (s.kind != ScenarioKind::kBase) FieldError("$.bsc", "only valid for kind \"base\"");
      const json& bsc = doc["bsc"];
      if (!bsc.is_object() || !bsc.contains("alpha")) FieldError("$.bsc", "missing field \"alpha\"");
      const json& alpha = bsc["alpha"];
      s.bsc_alphas = alpha.is_number() ? std::vector<double>{Number(alpha, "$.bsc.alpha")}
                                       : Range(alpha, "$.bsc.alpha");
      if (s.bsc_alphas.empty()) FieldError("$.bsc.alpha", "no crossover values");
      if (s.py->size() != 2) FieldError("$.p_y", "a binary symmetric leakage needs |Y| = 2");
      if (doc.contains("leakage")) FieldError("$", "give either \"leakage\" or \"bsc\", not both");
    } else {
      need("leakage");
      s.leakage = Channel(doc, "leakage");
    }
    if (s.kind == ScenarioKind::kAdversary) {
      need("channel");
      s.channel = Channel(doc, "channel");
    }
  }
  if (doc.contains("epsilon")) s.epsilon = Number(doc["epsilon"], "$.epsilon");
  if (doc.contains("sweep")) {
    s.sweep = Range(doc["sweep"], "$.sweep");
    if (s.sweep->empty()) FieldError("$.sweep", "no epsilon values");
  }
  if (doc.contains("budget")) {
    if (!doc["budget"].is_string()) FieldError("$.budget", "expected a string");
    s.budget = ParseBudget(doc["budget"].get<std::string>(), "$.budget");
    s.budget_given = true;
  }
  if (doc.contains("oracle")) {
    const json& o = doc["oracle"];
    if (!o.is_object()) FieldError("$.oracle", "expected an object");
    if (o.contains("resolution")) {
      s.oracle.resolution = static_cast<int>(Integer(o["resolution"], "$.oracle.resolution"));
    }
    if (o.contains("refine_levels")) {
      s.oracle.refine_levels =
          static_cast<int>(Integer(o["refine_levels"], "$.oracle.refine_levels"));
    }
    if (o.contains("samples")) s.oracle.samples = Integer(o["samples"], "$.oracle.samples");
    if (o.contains("seed")) {
      s.oracle.seed = static_cast<std::uint64_t>(Integer(o["seed"], "$.oracle.seed"));
    }
  }
  return s;
}

inline Scenario LoadScenario(const std::string& path) {
  std::ifstream in(path);
  Require(in.good(), ErrorCode::kInvalidArgument, path + ": cannot open scenario file");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    Fail(ErrorCode::kInvalidArgument, path + ": " + e.what());
  }
  try {
    return ParseScenario(doc);
  } catch (const Error& e) {
    Fail(e.code(), path + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Report serialization.

namespace internal {

inline json ToJson(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

inline json ToJson(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Index r = 0; r < m.rows(); ++r) rows.push_back(ToJson(Eigen::VectorXd(m.row(r).transpose())));
  return rows;
}

inline json ToJson(const std::vector<ProbVector>& list) {
  json out = json::array();
  for (const ProbVector& p : list) out.push_back(ToJson(p.values()));
  return out;
}

inline json ToJson(const MechanismAudit& a) {
  return {{"chi2_per_letter", a.chi2_per_letter},
          {"chi2_max", a.chi2_max},
          {"chi2_information", a.chi2_information},
          {"budget", a.budget},
          {"output_mixture_error", a.output_mixture_error},
          {"posterior_mixture_error", a.posterior_mixture_error}};
}

inline json ToJson(const Mechanism& m) {
  return {{"p_u", ToJson(m.pu.values())},
          {"output_conditionals", ToJson(m.output_conditionals)},
          {"posteriors", ToJson(m.posteriors)},
          {"kernel", ToJson(m.kernel.matrix())},
          {"epsilon", m.epsilon}};
}

inline json ToJson(const DesignMatrix& w) {
  return {{"matrix", ToJson(w.w)},
          {"singular_values", ToJson(w.singular_values())},
          {"right_vectors", ToJson(w.svd.right)},
          {"left_vectors", ToJson(w.svd.left)}};
}

}  // namespace internal

inline json DesignToJson(const ChannelMatrix& leakage, const ProbVector& py, const Design& d) {
  using internal::ToJson;
  const DesignReport& r = d.report;
  const ProbVector px = DerivePx(leakage, py);
  const DesignMatrix w = BuildW(leakage, py);
  return {{"schema_version", kSchemaVersion},
          {"report", "design"},
          {"inputs", {{"leakage", ToJson(leakage.matrix())}, {"p_y", ToJson(py.values())}}},
          {"p_x", ToJson(px.values())},
          {"epsilon", r.epsilon},
          {"w", ToJson(w)},
          {"sigma_max", r.sigma_max},
          {"degenerate", r.degenerate},
          {"l_star", ToJson(r.l_star.l)},
          {"j_star", ToJson(r.l_star.j)},
          {"output_shift", ToJson(r.output_shift)},
          {"mechanism", ToJson(d.mechanism)},
          {"approx_utility_nats", r.approx_utility_nats},
          {"exact_utility_nats", r.exact_utility_nats},
          {"approx_utility_bits", r.approx_utility_nats * kNatsToBits},
          {"exact_utility_bits", r.exact_utility_nats * kNatsToBits},
          {"utility_nats_coeff", r.UtilityCoefficientNats()},
          {"utility_bits_coeff", r.UtilityCoefficientBits()},
          {"leakage_mi_nats", r.leakage_mi_nats},
          {"leakage_mi_bits", r.leakage_mi_nats * kNatsToBits},
          {"epsilon_bounds",
           {{"leakage_expansion", r.bounds.leakage_expansion},
            {"utility_expansion", r.bounds.utility_expansion},
            {"posthoc", r.bounds.posthoc}}},
          {"lambda_min", r.lambda_min},
          {"audit", ToJson(r.audit)},
          {"warnings", r.warnings}};
}

inline json AdversaryToJson(const ChannelMatrix& leakage, const ProbVector& py,
                            const AdversaryDesign& d) {
  using internal::ToJson;
  const AdversaryDesignReport& r = d.report;
  const BinaryChannel& ch = r.channel;
  return {{"schema_version", kSchemaVersion},
          {"report", "adversary"},
          {"inputs",
           {{"leakage", ToJson(leakage.matrix())},
            {"p_y", ToJson(py.values())},
            {"channel", ToJson(ch.forward.matrix())}}},
          {"p_x", ToJson(DerivePx(leakage, py).values())},
          {"epsilon", r.epsilon},
          {"budget", ToString(r.budget)},
          {"radius", r.radius},
          {"inverse_coeffs", {{"a", ch.a}, {"b", ch.b}, {"c", ch.c}, {"d", ch.d}}},
          {"class", ToString(ch.klass)},
          {"sigma", r.sigma},
          {"degenerate", r.degenerate},
          {"psi", ToJson(r.psi.l)},
          {"p_u", ToJson(r.pu.values())},
          {"p_u_prime", ToJson(r.pu_prime.values())},
          {"coeff_u0", r.coeff_u0},
          {"coeff_u1", r.coeff_u1},
          {"mechanism", ToJson(d.mechanism)},
          {"approx_utility_nats", r.approx_utility_nats},
          {"exact_utility_nats", r.exact_utility_nats},
          {"utility_nats_coeff", r.UtilityCoefficientNats()},
          {"utility_bits_coeff", r.UtilityCoefficientNats() * kNatsToBits},
          {"leakage_mi_nats", r.leakage_mi_nats},
          {"adversary_posteriors", ToJson(r.adversary_posteriors)},
          {"chi2_adversary", r.chi2_adversary},
          {"chi2_information_adversary", r.chi2_information_adversary},
          {"chi2_u", r.chi2_u},
          {"induced_bounds", {r.induced_bounds.first, r.induced_bounds.second}},
          {"chi2_information_u", r.chi2_information_u},
          {"posthoc_bound", r.posthoc_bound},
          {"audit", ToJson(r.audit)},
          {"warnings", r.warnings}};
}

inline json ProviderToJson(const ProviderScenario& s, const ProviderDesign& d) {
  using internal::ToJson;
  const ProviderReport& r = d.report;
  return {{"schema_version", kSchemaVersion},
          {"report", "provider"},
          {"inputs",
           {{"p_x", ToJson(s.px.values())},
            {"p_y_given_x", ToJson(s.p_y_given_x.matrix())},
            {"p_z_given_x", ToJson(s.p_z_given_x.matrix())}}},
          {"p_y", ToJson(s.py.values())},
          {"p_z", ToJson(s.pz.values())},
          {"epsilon", r.epsilon},
          {"budget", ToString(r.budget)},
          {"radius", r.radius},
          {"w1", ToJson(r.matrices.w1)},
          {"w2", ToJson(r.matrices.w2)},
          {"product", ToJson(r.matrices.product)},
          {"fixed_vector_residual", r.matrices.fixed_vector_residual},
          {"case", ToString(r.selected_case)},
          {"sigma_max", r.sigma_max},
          {"sigma", r.sigma},
          {"tie_break", r.tie_break},
          {"chosen_direction", ToJson(r.chosen_direction.l)},
          {"x_conditionals", ToJson(r.x_conditionals)},
          {"mechanism", ToJson(d.mechanism)},
          {"approx_utility_nats", r.approx_utility_nats},
          {"exact_utility_nats", r.exact_utility_nats},
          {"utility_nats_coeff", r.UtilityCoefficientNats()},
          {"utility_bits_coeff", r.UtilityCoefficientNats() * kNatsToBits},
          {"leakage_mi_nats", r.leakage_mi_nats},
          {"posthoc_bound", r.posthoc_bound},
          {"audit", ToJson(r.audit)},
          {"warnings", r.warnings}};
}

// ---------------------------------------------------------------------------
// Report re-validation.

namespace internal {

inline ProbVector ReadDistribution(const json& j, const std::string& path) {
  const auto values = NumberList(j, path);
  return AtField(path, [&] { return ProbVector::FromStd(values); });
}

inline std::vector<ProbVector> ReadDistributions(const json& j, const std::string& path) {
  if (!j.is_array()) FieldError(path, "expected an array");
  std::vector<ProbVector> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    out.push_back(ReadDistribution(j[i], path + "[" + std::to_string(i) + "]"));
  }
  return out;
}

inline Eigen::VectorXd ReadVector(const json& j, const std::string& path) {
  const auto v = NumberList(j, path);
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Index>(v.size()));
}

inline void Check(bool ok, const std::string& what) {
  Require(ok, ErrorCode::kInvalidArgument, "report re-validation failed: " + what);
}

// Shared checks on the serialized mechanism against its reference marginals.
inline void CheckMechanism(const json& report, const ProbVector& output_marginal,
                           const ProbVector& prior, double budget) {
  const json& m = report.at("mechanism");
  const ProbVector pu = ReadDistribution(m.at("p_u"), "$.mechanism.p_u");
  const auto outputs = ReadDistributions(m.at("output_conditionals"), "$.mechanism.output_conditionals");
  const auto posts = ReadDistributions(m.at("posteriors"), "$.mechanism.posteriors");
  Check(static_cast<Index>(outputs.size()) == pu.size() &&
            static_cast<Index>(posts.size()) == pu.size(),
        "one conditional per symbol of U");
  Check(MaxAbsDifference(Mixture(pu, outputs), output_marginal.values()) <= 1e-10,
        "output conditionals do not mix to the output marginal");
  Check(MaxAbsDifference(Mixture(pu, posts), prior.values()) <= 1e-10,
        "posteriors do not mix to the prior");
  for (const ProbVector& p : posts) {
    Check(Chi2Divergence(p, prior) <= budget * (1.0 + 1e-9) + kChi2AbsoluteSlack,
          "posterior exceeds the budget");
  }
  const auto kernel = Matrix(m.at("kernel"), "$.mechanism.kernel");
  AtField("$.mechanism.kernel", [&] { return ChannelMatrix::FromRows(kernel); });
  const double exact = Number(report.at("exact_utility_nats"), "$.exact_utility_nats");
  Check(std::abs(exact - MutualInformation(JointDistribution::FromConditionals(pu, outputs))) <=
            1e-12 + 1e-9 * exact,
        "exact utility does not match the serialized conditionals");
}

inline void ValidateDesignReport(const json& r) {
  const auto leak_rows = Matrix(r.at("inputs").at("leakage"), "$.inputs.leakage");
  const ChannelMatrix leakage =
      AtField("$.inputs.leakage", [&] { return ChannelMatrix::FromRows(leak_rows); });
  const ProbVector py = ReadDistribution(r.at("inputs").at("p_y"), "$.inputs.p_y");
  const ProbVector px = DerivePx(leakage, py);
  Check(MaxAbsDifference(ReadVector(r.at("p_x"), "$.p_x"), px.values()) <= 1e-12, "p_x");
  const double eps = Number(r.at("epsilon"), "$.epsilon");
  const double sigma = Number(r.at("sigma_max"), "$.sigma_max");
  const Eigen::VectorXd l = ReadVector(r.at("l_star"), "$.l_star");
  PerturbationDirection::Make(l, px);
  const DesignMatrix w = BuildW(leakage, py);
  Check(std::abs((w.w * l).norm() - sigma) <= 1e-9 * sigma, "||W L*|| != sigma_max");
  Check(std::abs(Number(r.at("approx_utility_nats"), "$.approx_utility_nats") -
                 0.5 * eps * eps * sigma * sigma) <= 1e-12 * sigma * sigma,
        "approx utility != eps^2 sigma_max^2 / 2");
  Check(std::abs(Number(r.at("lambda_min"), "$.lambda_min") * sigma * sigma - 1.0) <= 1e-9,
        "lambda_min sigma_max^2 != 1");
  CheckMechanism(r, py, px, eps * eps);
}

inline void ValidateAdversaryReport(const json& r) {
  const auto leak_rows = Matrix(r.at("inputs").at("leakage"), "$.inputs.leakage");
  const ChannelMatrix leakage =
      AtField("$.inputs.leakage", [&] { return ChannelMatrix::FromRows(leak_rows); });
  const ProbVector py = ReadDistribution(r.at("inputs").at("p_y"), "$.inputs.p_y");
  const auto ch_rows = Matrix(r.at("inputs").at("channel"), "$.inputs.channel");
  const BinaryChannel ch = InvertBinaryChannel(ChannelMatrix::FromRows(ch_rows));
  const ProbVector px = DerivePx(leakage, py);
  const double radius = Number(r.at("radius"), "$.radius");
  const ProbVector pu_prime = ReadDistribution(r.at("p_u_prime"), "$.p_u_prime");
  Check(std::abs(pu_prime[0] - 0.5) <= 1e-10, "adversary marginal is not uniform");
  Check(r.at("class").get<std::string>() == ToString(ch.klass), "channel class");
  for (const ProbVector& p : ReadDistributions(r.at("adversary_posteriors"), "$.adversary_posteriors")) {
    Check(std::abs(Chi2Divergence(p, px) - radius * radius) <= 1e-12,
          "adversary posterior does not saturate the budget");
  }
  const auto bounds = InducedUConstraint(ch, std::sqrt(2.0) * radius);
  CheckMechanism(r, py, px, std::max(bounds.first, bounds.second));
}

inline void ValidateProviderReport(const json& r) {
  const json& in = r.at("inputs");
  const auto y_rows = Matrix(in.at("p_y_given_x"), "$.inputs.p_y_given_x");
  const auto z_rows = Matrix(in.at("p_z_given_x"), "$.inputs.p_z_given_x");
  const ProviderScenario s = ProviderScenario::Make(
      ChannelMatrix::FromRows(y_rows), ChannelMatrix::FromRows(z_rows),
      ProbVector::FromStd(NumberList(in.at("p_x"), "$.inputs.p_x"), Support::kStrictlyPositive));
  const double radius = Number(r.at("radius"), "$.radius");
  const Eigen::VectorXd l = ReadVector(r.at("chosen_direction"), "$.chosen_direction");
  PerturbationDirection::Make(l, s.pz);
  const std::string kase = r.at("case").get<std::string>();
  Check(kase == "sigma_gt_one" || kase == "sigma_eq_one", "case");
  const ProviderMatrices mats = BuildW1W2(s);
  Check(std::abs((mats.product.w * l).norm() - Number(r.at("sigma"), "$.sigma")) <= 1e-9,
        "||W1 W2 L|| != sigma");
  for (const ProbVector& p : ReadDistributions(r.at("mechanism").at("posteriors"),
                                               "$.mechanism.posteriors")) {
    Check(std::abs(Chi2Divergence(p, s.pz) - radius * radius) <= 1e-12,
          "Z posterior does not saturate the budget");
  }
  ReadDistributions(r.at("x_conditionals"), "$.x_conditionals");
  CheckMechanism(r, s.py, s.pz, radius * radius);
}

}  // namespace internal

// Parses a serialized report back and re-checks its invariants; throws on
// the first violation.
inline void ValidateReport(const json& report) {
  try {
    const std::string kind = report.at("report").get<std::string>();
    if (kind == "design") {
      internal::ValidateDesignReport(report);
    } else if (kind == "adversary") {
      internal::ValidateAdversaryReport(report);
    } else if (kind == "provider") {
      internal::ValidateProviderReport(report);
    } else {
      internal::FieldError("$.report", "unknown report kind \"" + kind + "\"");
    }
  } catch (const json::exception& e) {
    Fail(ErrorCode::kInvalidArgument, std::string("report re-validation failed: ") + e.what());
  }
}

// ---------------------------------------------------------------------------
// Commands.

inline std::string FormatNumber(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

// Flattens a JSON report into "path,value" lines.
inline std::string JsonToCsv(const json& j) {
  std::ostringstream out;
  out << "field,value\n";
  const auto walk = [&out](const auto& self, const json& node, const std::string& path) -> void {
    if (node.is_object()) {
      for (auto it = node.begin(); it != node.end(); ++it) {
        self(self, it.value(), path.empty() ? it.key() : path + "." + it.key());
      }
    } else if (node.is_array()) {
      for (std::size_t i = 0; i < node.size(); ++i) {
        self(self, node[i], path + "[" + std::to_string(i) + "]");
      }
    } else if (node.is_number_float()) {
      out << path << ',' << FormatNumber(node.get<double>()) << '\n';
    } else if (node.is_string()) {
      out << path << ",\"" << node.get<std::string>() << "\"\n";
    } else {
      out << path << ',' << node.dump() << '\n';
    }
  };
  walk(walk, j, "");
  return out.str();
}

struct RunOptions {
  std::string format;  // "json", "csv" or empty for the command default
  std::optional<int> oracle_resolution;
  std::optional<BudgetConvention> budget;
  std::optional<std::uint64_t> seed;
  unsigned threads = 0;
};

struct CommandOutput {
  std::string text;
  std::vector<std::string> warnings;
};

namespace internal {

inline void RequireKind(const Scenario& s, ScenarioKind kind, const std::string& command) {
  Require(s.kind == kind, ErrorCode::kInvalidArgument,
          command + " needs a scenario of kind \"" + ToString(kind) + "\", got \"" +
              ToString(s.kind) + "\"");
}

inline double RequireEpsilon(const Scenario& s) {
  Require(s.epsilon.has_value(), ErrorCode::kInvalidArgument, "$: missing field \"epsilon\"");
  return *s.epsilon;
}

inline std::string Emit(const json& report, const RunOptions& options) {
  const std::string format = options.format.empty() ? "json" : options.format;
  if (format == "json") return report.dump(2) + "\n";
  if (format == "csv") return JsonToCsv(report);
  Fail(ErrorCode::kInvalidArgument, "--format must be json or csv");
}

inline ChannelMatrix BaseLeakage(const Scenario& s) {
  if (s.leakage) return *s.leakage;
  Require(s.bsc_alphas.size() == 1, ErrorCode::kInvalidArgument,
          "$.bsc.alpha: design needs a single crossover value; use sweep for several");
  return BscLeakage(s.bsc_alphas.front());
}

inline BudgetConvention ResolveBudget(const Scenario& s, const RunOptions& options) {
  return options.budget.value_or(s.budget);
}

inline void RejectBudget(const Scenario& s, const RunOptions& options) {
  const bool half = ResolveBudget(s, options) == BudgetConvention::kHalfEpsSquared;
  Require(!half, ErrorCode::kInvalidArgument,
          "the budget convention only applies to adversary and provider scenarios");
}

}  // namespace internal

inline CommandOutput RunDesign(const Scenario& s, const RunOptions& options = {}) {
  internal::RequireKind(s, ScenarioKind::kBase, "design");
  internal::RejectBudget(s, options);
  const ChannelMatrix leakage = internal::BaseLeakage(s);
  const Design d = DesignMechanism(leakage, *s.py, internal::RequireEpsilon(s));
  const json report = DesignToJson(leakage, *s.py, d);
  ValidateReport(report);
  return {internal::Emit(report, options), d.report.warnings};
}

inline CommandOutput RunAdversary(const Scenario& s, const RunOptions& options = {}) {
  internal::RequireKind(s, ScenarioKind::kAdversary, "adversary");
  const BinaryChannel ch = InvertBinaryChannel(*s.channel);
  const AdversaryDesign d = DesignAdversarialMechanism(
      *s.leakage, *s.py, ch, internal::RequireEpsilon(s), internal::ResolveBudget(s, options));
  const json report = AdversaryToJson(*s.leakage, *s.py, d);
  ValidateReport(report);
  return {internal::Emit(report, options), d.report.warnings};
}

inline CommandOutput RunProvider(const Scenario& s, const RunOptions& options = {}) {
  internal::RequireKind(s, ScenarioKind::kProvider, "provider");
  const ProviderScenario ps = ProviderScenario::Make(*s.p_y_given_x, *s.p_z_given_x, *s.px);
  const ProviderDesign d =
      DesignProviderMechanism(ps, internal::RequireEpsilon(s), internal::ResolveBudget(s, options));
  const json report = ProviderToJson(ps, d);
  ValidateReport(report);
  return {internal::Emit(report, options), d.report.warnings};
}

// Epsilon sweep of the base design. Without a bsc block the columns compare
// the approximation with the exact and oracle utilities; with one, each
// crossover value is paired with every epsilon and the estimation metrics
// are reported instead. Rows follow input order.
inline CommandOutput RunSweep(const Scenario& s, const RunOptions& options = {}) {
  internal::RequireKind(s, ScenarioKind::kBase, "sweep");
  internal::RejectBudget(s, options);
  Require(s.sweep.has_value(), ErrorCode::kInvalidArgument, "$: missing field \"sweep\"");
  const std::string format = options.format.empty() ? "csv" : options.format;
  Require(format == "csv" || format == "json", ErrorCode::kInvalidArgument,
          "--format must be json or csv");
  const std::vector<double>& eps_list = *s.sweep;
  CommandOutput result;
  std::ostringstream csv;
  json rows = json::array();

  if (!s.bsc_alphas.empty()) {
    csv << "alpha,eps,mmse_designed,mmse_baseline,perr_designed,perr_baseline\n";
    for (double alpha : s.bsc_alphas) {
      const ChannelMatrix leakage = BscLeakage(alpha);
      const ProbVector px = DerivePx(leakage, *s.py);
      const ProbVector uniform{0.5, 0.5};
      const std::vector<ProbVector> independent{*s.py, *s.py};
      const double mmse_baseline = MmseBinary(px);
      const double perr_baseline = ErrorProbability(uniform, independent);
      for (double eps : eps_list) {
        const Design d = DesignMechanism(leakage, *s.py, eps);
        const Mechanism& m = d.mechanism;
        double mmse = 0.0;
        for (Index u = 0; u < m.pu.size(); ++u) mmse += m.pu[u] * MmseBinary(m.posteriors[u]);
        const double perr = ErrorProbability(m.pu, m.output_conditionals);
        csv << FormatNumber(alpha) << ',' << FormatNumber(eps) << ',' << FormatNumber(mmse) << ','
            << FormatNumber(mmse_baseline) << ',' << FormatNumber(perr) << ','
            << FormatNumber(perr_baseline) << '\n';
        rows.push_back({{"alpha", alpha},
                        {"eps", eps},
                        {"mmse_designed", mmse},
                        {"mmse_baseline", mmse_baseline},
                        {"perr_designed", perr},
                        {"perr_baseline", perr_baseline}});
      }
    }
  } else {
    const ChannelMatrix& leakage = *s.leakage;
    const int resolution = options.oracle_resolution.value_or(s.oracle.resolution);
    const std::uint64_t seed = options.seed.value_or(s.oracle.seed);
    const bool binary = leakage.inputs() == 2;
    if (!binary) {
      result.warnings.push_back(
          "K > 2: the oracle column is a randomized lower bound, not an exact optimum");
    }
    csv << "eps,approx_utility_nats,exact_utility_nats,oracle_utility_nats,leakage_mi_nats,"
           "chi2_max\n";
    for (double eps : eps_list) {
      const Design d = DesignMechanism(leakage, *s.py, eps);
      double oracle = 0.0;
      if (binary) {
        ExactSearchOptions o;
        o.resolution = resolution;
        o.refine_levels = s.oracle.refine_levels;
        o.threads = options.threads;
        oracle = ExactBinarySearch(leakage, *s.py, eps, o).best_utility_nats;
      } else {
        RandomSearchOptions o;
        o.samples = s.oracle.samples;
        o.seed = seed;
        oracle = RandomizedSearch(leakage, *s.py, eps, o).best_utility_nats;
      }
      const DesignReport& r = d.report;
      csv << FormatNumber(eps) << ',' << FormatNumber(r.approx_utility_nats) << ','
          << FormatNumber(r.exact_utility_nats) << ',' << FormatNumber(oracle) << ','
          << FormatNumber(r.leakage_mi_nats) << ',' << FormatNumber(r.audit.chi2_max) << '\n';
      rows.push_back({{"eps", eps},
                      {"approx_utility_nats", r.approx_utility_nats},
                      {"exact_utility_nats", r.exact_utility_nats},
                      {"oracle_utility_nats", oracle},
                      {"leakage_mi_nats", r.leakage_mi_nats},
                      {"chi2_max", r.audit.chi2_max}});
      for (const std::string& w : r.warnings) {
        result.warnings.push_back("eps " + FormatNumber(eps) + ": " + w);
      }
    }
  }
  result.text = format == "csv" ? csv.str() : rows.dump(2) + "\n";
  return result;
}

}  // namespace chi2mech::cli

#endif  // CHI2MECH_CLI_HPP_
