#include "qcp/ssl.hpp"

#include <algorithm>

namespace qcp {

ChallengeDistribution SslScheme::verify_distribution(const BitString& p) const {
  return ChallengeDistribution::tr(p, verify_r);
}

nlohmann::json SslScheme::to_json() const { return {{"base", base->to_json()}, {"verify_r", verify_r}}; }

SslScheme make_ssl_scheme(QasHandle base, double verify_r) {
  if (!base) throw std::invalid_argument("make_ssl_scheme: null base scheme");
  if (!(verify_r >= 0.0 && verify_r <= 1.0)) throw std::invalid_argument("make_ssl_scheme: r must lie in [0, 1]");
  return SslScheme{std::move(base), verify_r};
}

// ---- FunctionTable ----------------------------------------------------------------

FunctionTable::FunctionTable(int input_bits, int output_bits, std::vector<std::uint32_t> values)
    : n_(input_bits), m_(output_bits), values_(std::move(values)) {
  if (n_ < 1 || n_ > kMaxInputBits) throw std::invalid_argument("FunctionTable: input bits must lie in [1, 8]");
  if (m_ < 1 || m_ > BitString::kMaxLength) throw std::invalid_argument("FunctionTable: output bits must lie in [1, 30]");
  if (values_.size() != (std::size_t{1} << n_)) throw DimensionError("FunctionTable: table size is not 2^n");
  for (std::uint32_t v : values_) {
    if ((v >> m_) != 0) throw DimensionError("FunctionTable: value wider than m bits");
  }
}

FunctionTable FunctionTable::identity(int bits) {
  if (bits < 1 || bits > kMaxInputBits) throw std::invalid_argument("FunctionTable::identity: bits must lie in [1, 8]");
  std::vector<std::uint32_t> v(std::size_t{1} << bits);
  for (std::uint32_t x = 0; x < v.size(); ++x) v[x] = x;
  return FunctionTable(bits, bits, std::move(v));
}

FunctionTable FunctionTable::random(int input_bits, int output_bits, Rng& rng) {
  if (input_bits < 1 || input_bits > kMaxInputBits) throw std::invalid_argument("FunctionTable::random: bad input bits");
  std::vector<std::uint32_t> v(std::size_t{1} << input_bits);
  for (auto& e : v) e = static_cast<std::uint32_t>(rng.uniform_below(std::uint64_t{1} << output_bits));
  return FunctionTable(input_bits, output_bits, std::move(v));
}

BitString FunctionTable::operator()(const BitString& x) const {
  if (x.length() != n_) throw DimensionError("FunctionTable: input length differs");
  return BitString(values_[x.value()], m_);
}

nlohmann::json FunctionTable::to_json() const { return {{"n", n_}, {"m", m_}, {"values", values_}}; }

FunctionTable FunctionTable::from_json(const nlohmann::json& j) {
  return FunctionTable(j.at("n").get<int>(), j.at("m").get<int>(), j.at("values").get<std::vector<std::uint32_t>>());
}

int CompareFunction::operator()(const BitString& x) const { return f(x) == y ? 1 : 0; }

// ---- LeasedProgram ----------------------------------------------------------------

LeasedProgram::LeasedProgram(ProtectedProgram program, std::optional<FunctionTable> f)
    : program_(std::move(program)), f_(std::move(f)) {
  if (f_ && f_->output_bits() != program_.scheme().key_bits()) {
    throw DimensionError("LeasedProgram: f output length differs from the point length");
  }
}

const FunctionTable& LeasedProgram::function() const {
  if (!f_) throw StateError("LeasedProgram: point program has no function table");
  return *f_;
}

nlohmann::json LeasedProgram::to_json() const {
  nlohmann::json j = {{"kind", f_ ? "compare" : "point"}, {"program", program_.to_json()}};
  if (f_) j["f"] = f_->to_json();
  return j;
}

LeasedProgram LeasedProgram::from_json(const nlohmann::json& j, QasHandle scheme) {
  std::optional<FunctionTable> f;
  if (j.at("kind") == "compare") f = FunctionTable::from_json(j.at("f"));
  return LeasedProgram(ProtectedProgram::from_json(j.at("program"), std::move(scheme)), std::move(f));
}

nlohmann::json VerifyRecord::to_json() const { return {{"x", x.to_string()}, {"outcome", outcome}, {"accept", accept}}; }

void write_transcript_line(std::ostream& out, const VerifyRecord& record) { out << record.to_json().dump() << '\n'; }

// ---- point functions --------------------------------------------------------------

LeasedProgram ssl_lease(const SslScheme& scheme, const PointFunction& c) {
  return LeasedProgram(protect(scheme.base, c.point));
}

int ssl_eval(LeasedProgram& program, const BitString& x, Rng& rng) { return eval_preserving(program.program(), x, rng); }

namespace {

void require_point(const SslScheme& scheme, const PointFunction& c) {
  if (c.point.length() != scheme.base->key_bits()) throw DimensionError("ssl: point length differs from the scheme's");
}

}  // namespace

VerifyRecord ssl_verify(const SslScheme& scheme, const PointFunction& c, const DensityOperator& returned, Rng& rng) {
  require_point(scheme, c);
  VerifyRecord rec;
  rec.x = scheme.verify_distribution(c.point).sample(rng);
  rec.outcome = rng.bernoulli(accept_probability(*scheme.base, rec.x.value(), returned)) ? 1 : 0;
  rec.accept = rec.outcome == c(rec.x);
  return rec;
}

VerifyRecord ssl_verify(const SslScheme& scheme, const PointFunction& c, const Vector& returned, Rng& rng) {
  require_point(scheme, c);
  VerifyRecord rec;
  rec.x = scheme.verify_distribution(c.point).sample(rng);
  rec.outcome = rng.bernoulli(eval_accept_probability(*scheme.base, returned, rec.x.value())) ? 1 : 0;
  rec.accept = rec.outcome == c(rec.x);
  return rec;
}

double ssl_verify_accept_probability(const SslScheme& scheme, const PointFunction& c, const DensityOperator& returned) {
  require_point(scheme, c);
  const ChallengeDistribution dist = scheme.verify_distribution(c.point);
  double total = 0.0;
  for (std::uint32_t x = 0; x < dist.support_size(); ++x) {
    const double w = dist.prob(x);
    if (w == 0.0) continue;
    const double a = accept_probability(*scheme.base, x, returned);
    total += w * (x == c.point.value() ? a : 1.0 - a);
  }
  return std::clamp(total, 0.0, 1.0);
}

// ---- compute-and-compare ----------------------------------------------------------

LeasedProgram cc_lease(const SslScheme& scheme, const CompareFunction& c) {
  if (c.y.length() != c.f.output_bits()) throw DimensionError("cc_lease: y length differs from f's output");
  return LeasedProgram(protect(scheme.base, c.y), c.f);
}

int cc_eval(LeasedProgram& program, const BitString& x, Rng& rng) {
  return eval_preserving(program.program(), program.function()(x), rng);
}

VerifyRecord cc_verify(const SslScheme& scheme, const CompareFunction& c, const DensityOperator& returned, Rng& rng) {
  return ssl_verify(scheme, PointFunction{c.y}, returned, rng);
}

ChallengeDistribution pushforward(const ChallengeDistribution& dist, const FunctionTable& f) {
  if (dist.bits() != f.input_bits()) throw DimensionError("pushforward: distribution length differs from f's input");
  std::vector<double> out(std::size_t{1} << f.output_bits(), 0.0);
  for (std::uint32_t x = 0; x < dist.support_size(); ++x) out[f.values()[x]] += dist.prob(x);
  return ChallengeDistribution::table(f.output_bits(), std::move(out));
}

double eps_f(double p_triv_cc, double p_triv_pf, double epsilon) { return (p_triv_cc - p_triv_pf) + epsilon; }

}  // namespace qcp
