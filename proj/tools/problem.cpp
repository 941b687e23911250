#include "problem.hpp"

#include <fstream>
#include <sstream>

#include <toml.hpp>

#include "implicit/error.hpp"

namespace implicit::cli {

namespace {

using nlohmann::json;

[[noreturn]] void bad(const std::string& what) { fail(ErrorKind::InvalidArgument, "problem file: " + what); }

double number(const json& v, const std::string& key) {
  if (!v.is_number()) bad("'" + key + "' must be a number");
  return v.get<double>();
}

std::size_t count(const json& v, const std::string& key) {
  if (!v.is_number_integer() || v.get<long long>() < 0) bad("'" + key + "' must be a non-negative integer");
  return v.get<std::size_t>();
}

// Accepts a scalar (broadcast to `n` entries when n > 0) or an array.
std::vector<double> numbers(const json& v, const std::string& key, std::size_t n = 0) {
  if (v.is_number()) return std::vector<double>(n == 0 ? 1 : n, v.get<double>());
  if (!v.is_array()) bad("'" + key + "' must be a number or an array of numbers");
  std::vector<double> out;
  for (const auto& e : v) out.push_back(number(e, key));
  return out;
}

FieldMode mode(const json& v, const std::string& key) {
  if (!v.is_string()) bad("'" + key + "' must be a string");
  return parse_field_mode(v.get<std::string>());
}

const json* find(const json& obj, const char* key) {
  const auto it = obj.find(key);
  return it == obj.end() ? nullptr : &*it;
}

Vector to_vector(const std::vector<double>& v) {
  return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace

ProblemFile parse_problem(const json& doc, const std::filesystem::path& source) {
  if (!doc.is_object()) bad("top level must be a table");
  ProblemFile p;
  p.source = source;
  if (auto v = find(doc, "name")) p.name = v->get<std::string>();
  const json* dim = find(doc, "dim");
  if (!dim) bad("missing 'dim'");
  p.dim = count(*dim, "dim");
  const json* exprs = find(doc, "expressions");
  if (!exprs || !exprs->is_array()) bad("'expressions' must be an array of strings");
  for (const auto& e : *exprs) {
    if (!e.is_string()) bad("'expressions' must be an array of strings");
    p.expressions.push_back(e.get<std::string>());
  }
  p.codim = p.expressions.size();
  if (auto v = find(doc, "codim")) {
    if (count(*v, "codim") != p.codim) bad("'codim' does not match the number of expressions");
  }
  if (auto v = find(doc, "perturbation")) {
    if (!v->is_string()) bad("'perturbation' must be a string");
    p.perturbation = v->get<std::string>();
  }
  const json* seed = find(doc, "seed");
  if (!seed) bad("missing 'seed'");
  p.seed = numbers(*seed, "seed");
  if (p.seed.size() != p.dim) bad("'seed' must have dim entries");
  if (auto v = find(doc, "seed_tol")) p.seed_tol = number(*v, "seed_tol");

  const json* domain = find(doc, "domain");
  if (!domain || !domain->is_object() || !find(*domain, "lo") || !find(*domain, "hi")) bad("missing [domain] lo/hi");
  p.domain_lo = numbers(domain->at("lo"), "domain.lo", p.dim);
  p.domain_hi = numbers(domain->at("hi"), "domain.hi", p.dim);
  if (p.domain_lo.size() != p.dim || p.domain_hi.size() != p.dim) bad("domain bounds must have dim entries");

  const std::size_t k = p.dim > p.codim ? p.dim - p.codim : 0;
  if (auto chain = find(doc, "chain")) {
    if (auto v = find(*chain, "spans")) p.chain.spans = numbers(*v, "chain.spans", k);
    if (auto v = find(*chain, "steps")) p.chain.steps = numbers(*v, "chain.steps", k);
    if (auto v = find(*chain, "mode")) p.chain.mode = mode(*v, "chain.mode");
  }
  if (auto g = find(doc, "gensol")) {
    if (auto v = find(*g, "radii")) p.gensol.radii = numbers(*v, "gensol.radii");
    if (auto v = find(*g, "per_radius")) p.gensol.per_radius = count(*v, "gensol.per_radius");
    if (auto v = find(*g, "budget")) p.gensol.budget = count(*v, "gensol.budget");
    if (auto v = find(*g, "step")) p.gensol.step = number(*v, "gensol.step");
    if (auto v = find(*g, "chunk")) p.gensol.chunk = count(*v, "gensol.chunk");
    if (auto v = find(*g, "mode")) p.gensol.mode = mode(*v, "gensol.mode");
    if (auto v = find(*g, "trace_tol")) p.gensol.trace_tol = number(*v, "gensol.trace_tol");
    if (auto v = find(*g, "eps_stop")) p.gensol.eps_stop = number(*v, "gensol.eps_stop");
    if (auto w = find(*g, "window")) {
      if (!find(*w, "lo") || !find(*w, "hi")) bad("[gensol.window] needs lo and hi");
      p.gensol.window_lo = numbers(w->at("lo"), "gensol.window.lo", p.dim);
      p.gensol.window_hi = numbers(w->at("hi"), "gensol.window.hi", p.dim);
    }
  }
  if (auto v = find(doc, "variations")) {
    if (auto l = find(*v, "lambdas")) p.variations.lambdas = numbers(*l, "variations.lambdas");
  }
  if (auto c = find(doc, "checks")) {
    if (auto v = find(*c, "residual_tol")) p.checks.residual_tol = number(*v, "checks.residual_tol");
    if (auto v = find(*c, "regularity_tol")) p.checks.regularity_tol = number(*v, "checks.regularity_tol");
    if (auto v = find(*c, "gensol_residual_tol"))
      p.checks.gensol_residual_tol = number(*v, "checks.gensol_residual_tol");
    if (auto v = find(*c, "seed_slack")) p.checks.seed_slack = number(*v, "checks.seed_slack");
  }
  if (auto o = find(doc, "output")) {
    if (auto v = find(*o, "dir")) p.output_dir = v->get<std::string>();
  }
  return p;
}

ProblemFile load_problem(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Io, "cannot open problem file " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  json doc;
  if (path.extension() == ".json") {
    try {
      doc = json::parse(text.str());
    } catch (const json::parse_error& e) {
      fail(ErrorKind::InvalidArgument, path.string() + ": " + e.what());
    }
  } else {
    try {
      const toml::table table = toml::parse(text.str(), path.string());
      std::ostringstream converted;
      converted << toml::json_formatter{table};
      doc = json::parse(converted.str());
    } catch (const toml::parse_error& e) {
      std::ostringstream msg;
      msg << path.string() << ":" << e.source().begin.line << ":" << e.source().begin.column << ": "
          << e.description();
      fail(ErrorKind::InvalidArgument, msg.str());
    }
  }
  return parse_problem(doc, path);
}

ImplicitSystem ProblemFile::system() const {
  if (dim < 2) bad("'dim' must be at least 2");
  if (codim == 0 || codim >= dim) bad("need 1 <= number of expressions < dim");
  std::vector<ScalarField> fields;
  for (const auto& e : expressions) fields.push_back(parse(e, dim));
  return ImplicitSystem(std::move(fields), domain(), to_vector(seed), seed_tol);
}

Box ProblemFile::domain() const { return Box(to_vector(domain_lo), to_vector(domain_hi)); }

Box ProblemFile::window() const {
  if (gensol.window_lo.empty()) return domain();
  return Box(to_vector(gensol.window_lo), to_vector(gensol.window_hi));
}

}  // namespace implicit::cli
