#include "slotnav/encoders/encoders.hpp"

#include <cmath>

#include "slotnav/error.hpp"
#include "slotnav/numkit/params.hpp"

namespace slotnav::encoders {

using numkit::Matrix;

namespace {

constexpr std::uint64_t kVisualStream = 0x7151;
constexpr std::uint64_t kTextStream = 0x7e47;

Matrix seeded_lift(std::uint64_t seed, std::uint64_t stream, std::size_t out, std::size_t in) {
  if (out == 0) fail(ErrorKind::Config, "encoder dimension must be >= 1");
  numkit::Rng rng(numkit::derive_seed(seed, {stream}));
  return numkit::random_normal(rng, out, in, 1.0 / std::sqrt(static_cast<double>(in)));
}

}  // namespace

VisualEncoder::VisualEncoder(const world::WorldConfig& world, std::size_t dim, std::uint64_t seed)
    : layout_(world.vocab),
      range_(world.sensor.view_range),
      lift_(seeded_lift(seed, kVisualStream, dim, layout_.dim())) {}

Matrix VisualEncoder::encode(const Matrix& raw) const {
  if (raw.cols() != layout_.dim()) {
    fail(ErrorKind::Config, "visual encoder expects " + std::to_string(layout_.dim()) +
                                " raw columns, got " + std::to_string(raw.cols()));
  }
  const std::size_t d = dim();
  const std::size_t geo = layout_.offset();
  Matrix out(raw.rows(), d);
  std::vector<double> x(layout_.dim());
  for (std::size_t r = 0; r < raw.rows(); ++r) {
    for (std::size_t c = 0; c < x.size(); ++c) {
      x[c] = c >= geo ? raw(r, c) / range_ : raw(r, c);
    }
    for (std::size_t k = 0; k < d; ++k) {
      double s = 0.0;
      for (std::size_t c = 0; c < x.size(); ++c) s += lift_(k, c) * x[c];
      out(r, k) = s;
    }
  }
  return out;
}

ViewTokens VisualEncoder::encode_views(const world::Observation& obs) const {
  ViewTokens out;
  for (std::size_t v = 0; v < world::kViewCount; ++v) out[v] = encode(obs.views[v]);
  return out;
}

Matrix VisualEncoder::null_embedding() const {
  Matrix raw(1, layout_.dim());
  raw(0, layout_.null_flag()) = 1.0;
  return encode(raw);
}

InstructionEncoder::InstructionEncoder(const world::Vocabulary& vocab, std::size_t dim,
                                       std::uint64_t seed)
    : vocab_(vocab),
      lift_(seeded_lift(seed, kTextStream, dim,
                        2 * vocab.colors.size() + 2 * vocab.kinds.size() + 2 + 2 +
                            world::kHeadingWords.size())) {}

Matrix InstructionEncoder::onehot(const world::InstructionSpec& spec) const {
  const std::size_t nc = vocab_.colors.size();
  const std::size_t nk = vocab_.kinds.size();
  auto in_vocab = [&](const world::Descriptor& d) { return d.color < nc && d.kind < nk; };
  if (!in_vocab(spec.target) || (spec.via && !in_vocab(*spec.via)) ||
      spec.heading >= world::kHeadingWords.size()) {
    fail(ErrorKind::Encoding, "instruction attributes outside the vocabulary");
  }
  Matrix x(1, onehot_dim());
  std::size_t o = 0;
  x(0, o + spec.target.color) = 1.0;
  o += nc;
  x(0, o + spec.target.kind) = 1.0;
  o += nk;
  x(0, o + (spec.via ? spec.via->color : nc)) = 1.0;
  o += nc + 1;
  x(0, o + (spec.via ? spec.via->kind : nk)) = 1.0;
  o += nk + 1;
  x(0, o + (spec.via ? 1 : 0)) = 1.0;
  o += 2;
  x(0, o + spec.heading) = 1.0;
  return x;
}

Matrix InstructionEncoder::encode(const world::InstructionSpec& spec) const {
  const Matrix x = onehot(spec);
  Matrix out(1, dim());
  double sq = 0.0;
  for (std::size_t k = 0; k < dim(); ++k) {
    double s = 0.0;
    for (std::size_t c = 0; c < x.cols(); ++c) s += lift_(k, c) * x(0, c);
    out(0, k) = s;
    sq += s * s;
  }
  const double n = std::sqrt(sq);
  if (!(n > 0.0)) fail(ErrorKind::Encoding, "instruction embedding has zero norm");
  for (std::size_t k = 0; k < dim(); ++k) out(0, k) /= n;
  return out;
}

Matrix InstructionEncoder::encode(std::string_view text) const {
  return encode(world::parse_instruction(text, vocab_));
}

}  // namespace slotnav::encoders
