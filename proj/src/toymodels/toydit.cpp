#include "dfv/toymodels/toydit.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#ifdef __GLIBC__
#include <malloc.h>
#endif
#include <map>
#include <numbers>
#include <sstream>

#include "dfv/numcore/dfvt.hpp"
#include "dfv/numcore/error.hpp"

namespace dfv::toy {

namespace {

using ConstMap = Eigen::Map<const Matrix>;
using RowVector = Eigen::RowVectorXd;

Matrix random_matrix(RngStream& rng, Eigen::Index rows, Eigen::Index cols, double scale) {
  const Grid g = rng.gaussian({static_cast<std::size_t>(rows), static_cast<std::size_t>(cols)});
  return ConstMap(g.data(), rows, cols) * scale;
}

// Sinusoidal features per axis; frequencies pi/2, pi/4, ... cover periods
// 4 to 64 tokens, enough to tell apart every cell of a 16-wide grid.
Matrix positional_encoding(const ClipGeometry& g, std::size_t d) {
  const std::size_t pairs = d / 6;
  Matrix pe = Matrix::Zero(static_cast<Eigen::Index>(g.tokens()), static_cast<Eigen::Index>(d));
  const std::size_t extents[3] = {g.frames, g.height, g.width};
  Eigen::Index row = 0;
  for (std::size_t f = 0; f < extents[0]; ++f) {
    for (std::size_t y = 0; y < extents[1]; ++y) {
      for (std::size_t x = 0; x < extents[2]; ++x, ++row) {
        const double pos[3] = {double(f), double(y), double(x)};
        for (std::size_t axis = 0; axis < 3; ++axis) {
          for (std::size_t j = 0; j < pairs; ++j) {
            const double w = std::numbers::pi / std::pow(2.0, double(j + 1));
            const auto col = static_cast<Eigen::Index>(axis * 2 * pairs + 2 * j);
            pe(row, col) = std::sin(pos[axis] * w);
            pe(row, col + 1) = std::cos(pos[axis] * w);
          }
        }
      }
    }
  }
  return pe;
}

RowVector time_features(double t, double horizon, std::size_t d) {
  const std::size_t pairs = d / 2;
  RowVector phi = RowVector::Zero(static_cast<Eigen::Index>(d));
  const double s = t / horizon;
  for (std::size_t j = 0; j < pairs; ++j) {
    const double w = std::pow(100.0, pairs > 1 ? double(j) / double(pairs - 1) : 0.0);
    phi(static_cast<Eigen::Index>(2 * j)) = std::sin(s * w);
    phi(static_cast<Eigen::Index>(2 * j + 1)) = std::cos(s * w);
  }
  return phi;
}

// One pass per row keeps the row in L1 between max, exp and scaling.
void softmax_rows(Matrix& s) {
  for (Eigen::Index r = 0; r < s.rows(); ++r) {
    auto row = s.row(r).array();
    row = (row - row.maxCoeff()).exp();
    row *= 1.0 / row.sum();
  }
}

// The attention matrices are just over glibc's 32 MiB ceiling for recycling
// freed mmap chunks, so each forward pass would page-fault its score
// matrices in afresh (about 15 ms each at 2050 tokens). Keep large frees in
// the heap instead.
void retain_large_allocations() {
#ifdef __GLIBC__
  static const bool once = [] {
    mallopt(M_MMAP_THRESHOLD, 512 << 20);
    mallopt(M_TRIM_THRESHOLD, 1 << 30);
    return true;
  }();
  (void)once;
#endif
}

void validate(const ToyDiTConfig& c) {
  if (c.width < 6 || c.blocks < 1 || c.text_tokens < 1 || c.conditions < 1 || c.mlp_hidden < 1) {
    fail(ErrorKind::Parameter, "toy DiT sizes must be positive (width >= 6)");
  }
  if (c.geometry.tokens() == 0 || c.geometry.channels == 0) fail(ErrorKind::InvalidDimension, "empty geometry");
  if (!(c.horizon > 0.0)) fail(ErrorKind::Parameter, "horizon must be positive");
  retain_large_allocations();
}

}  // namespace

ToyDiTWeights ToyDiTWeights::zeros_like() const {
  ToyDiTWeights z = *this;
  z.for_each([](const std::string&, Matrix& m) { m.setZero(); });
  return z;
}

struct ToyDiT::Cache {
  struct Block {
    Matrix h, q, k, v, a, o, h1, z;
  };
  Matrix x, h_final;
  RowVector phi;
  std::vector<Block> blocks;
};

ToyDiT::ToyDiT(const ToyDiTConfig& cfg, const RngStream& init) : cfg_(cfg) {
  validate(cfg_);
  RngStream rng = init;
  const auto d = static_cast<Eigen::Index>(cfg_.width);
  const auto h = static_cast<Eigen::Index>(cfg_.mlp_hidden);
  const auto D = static_cast<Eigen::Index>(cfg_.geometry.channels);
  const double sd = 1.0 / std::sqrt(double(d));
  w_.embed = random_matrix(rng, static_cast<Eigen::Index>(cfg_.conditions * cfg_.text_tokens), d, 1.0);
  w_.w_in = random_matrix(rng, D, d, 1.0);
  w_.b_in = Matrix::Zero(1, d);
  w_.w_time = random_matrix(rng, d, d, sd);
  w_.b_time = Matrix::Zero(1, d);
  for (std::size_t i = 0; i < cfg_.blocks; ++i) {
    BlockWeights b;
    b.wq = random_matrix(rng, d, d, sd);
    b.wk = random_matrix(rng, d, d, sd);
    b.wv = random_matrix(rng, d, d, sd);
    b.wo = random_matrix(rng, d, d, sd);
    b.w1 = random_matrix(rng, d, h, sd);
    b.b1 = Matrix::Zero(1, h);
    b.w2 = random_matrix(rng, h, d, 1.0 / std::sqrt(double(h)));
    b.b2 = Matrix::Zero(1, d);
    w_.blocks.push_back(std::move(b));
  }
  w_.w_out = Matrix::Zero(d, D);
  w_.b_out = Matrix::Zero(1, D);
  w_.w_pool = random_matrix(rng, d, d, sd);
  pos_ = positional_encoding(cfg_.geometry, cfg_.width);
}

ToyDiT::ToyDiT(const ToyDiTConfig& cfg, ToyDiTWeights weights) : cfg_(cfg), w_(std::move(weights)) {
  validate(cfg_);
  const auto d = static_cast<Eigen::Index>(cfg_.width);
  const auto h = static_cast<Eigen::Index>(cfg_.mlp_hidden);
  const auto D = static_cast<Eigen::Index>(cfg_.geometry.channels);
  auto expect = [](const Matrix& m, Eigen::Index r, Eigen::Index c, const char* name) {
    if (m.rows() != r || m.cols() != c) fail(ErrorKind::Shape, std::string("weight '") + name + "' has wrong shape");
    if (!m.allFinite()) fail(ErrorKind::Domain, std::string("weight '") + name + "' is not finite");
  };
  expect(w_.embed, static_cast<Eigen::Index>(cfg_.conditions * cfg_.text_tokens), d, "embed");
  expect(w_.w_in, D, d, "w_in");
  expect(w_.b_in, 1, d, "b_in");
  expect(w_.w_time, d, d, "w_time");
  expect(w_.b_time, 1, d, "b_time");
  expect(w_.w_pool, d, d, "w_pool");
  if (w_.blocks.size() != cfg_.blocks) fail(ErrorKind::Shape, "block count differs from config");
  for (const auto& b : w_.blocks) {
    expect(b.wq, d, d, "wq");
    expect(b.wk, d, d, "wk");
    expect(b.wv, d, d, "wv");
    expect(b.wo, d, d, "wo");
    expect(b.w1, d, h, "w1");
    expect(b.b1, 1, h, "b1");
    expect(b.w2, h, d, "w2");
    expect(b.b2, 1, d, "b2");
  }
  expect(w_.w_out, d, D, "w_out");
  expect(w_.b_out, 1, D, "b_out");
  pos_ = positional_encoding(cfg_.geometry, cfg_.width);
}

bool ToyDiT::has_condition(flow::ConditionId c) const {
  return c.label >= 0 && static_cast<std::size_t>(c.label) < cfg_.conditions;
}

Grid ToyDiT::condition_embedding(flow::ConditionId c) const {
  if (!has_condition(c)) fail(ErrorKind::Condition, "unknown condition label " + std::to_string(c.label));
  const auto n = static_cast<Eigen::Index>(cfg_.text_tokens);
  Grid rows({cfg_.text_tokens, cfg_.width});
  Eigen::Map<Matrix>(rows.data(), n, static_cast<Eigen::Index>(cfg_.width)) = w_.embed.middleRows(c.label * n, n);
  return rows;
}

Matrix ToyDiT::forward(const Grid& x, double t, const Matrix& text, Cache* cache, std::span<const int> capture,
                       std::vector<AttentionSnapshot>* snaps) const {
  const auto M = static_cast<Eigen::Index>(cfg_.geometry.tokens());
  const auto D = static_cast<Eigen::Index>(cfg_.geometry.channels);
  const auto n = static_cast<Eigen::Index>(cfg_.text_tokens);
  const double scale = 1.0 / std::sqrt(double(cfg_.width));
  if (!(t >= 0.0 && t <= cfg_.horizon)) fail(ErrorKind::Domain, "time outside [0, T]");

  const ConstMap X(x.data(), M, D);
  const RowVector phi = time_features(t, cfg_.horizon, cfg_.width);
  // Besides joint attention, the condition reaches every latent token through
  // its mean text row, as pooled text vectors do in multimodal DiTs.
  const RowVector temb = phi * w_.w_time + w_.b_time + text.colwise().mean() * w_.w_pool;

  Matrix H(n + M, static_cast<Eigen::Index>(cfg_.width));
  H.topRows(n) = text;
  H.bottomRows(M) = X * w_.w_in + pos_;
  H.bottomRows(M).rowwise() += w_.b_in.row(0) + temb;

  if (cache) {
    cache->x = X;
    cache->phi = phi;
    cache->blocks.clear();
  }
  for (std::size_t l = 0; l < w_.blocks.size(); ++l) {
    const BlockWeights& b = w_.blocks[l];
    Matrix Q = H * b.wq, K = H * b.wk, V = H * b.wv;
    Matrix A;
    A.noalias() = scale * Q * K.transpose();
    softmax_rows(A);
    Matrix O = A * V;
    Matrix H1 = H + O * b.wo;
    Matrix Z = H1 * b.w1;
    Z.rowwise() += b.b1.row(0);
    Matrix H2 = H1 + Z.cwiseMax(0.0) * b.w2;
    H2.rowwise() += b.b2.row(0);

    const bool wanted = std::find(capture.begin(), capture.end(), static_cast<int>(l)) != capture.end();
    if (wanted && snaps) {
      Matrix copy = cache ? A : std::move(A);
      snaps->emplace_back(static_cast<int>(l), t, cfg_.text_tokens, cfg_.geometry.token_dims(), std::move(copy));
    }
    if (cache) {
      cache->blocks.push_back({std::move(H), std::move(Q), std::move(K), std::move(V), std::move(A), std::move(O),
                               H1, std::move(Z)});
    }
    H = std::move(H2);
  }
  Matrix out = H.bottomRows(M) * w_.w_out;
  out.rowwise() += w_.b_out.row(0);
  if (cache) cache->h_final = std::move(H);
  return out;
}

std::vector<AttentionOutput> ToyDiT::compute_attention(std::span<const AttentionQuery> batch,
                                                       std::span<const int> capture_layers) {
  std::vector<AttentionOutput> outs;
  outs.reserve(batch.size());
  const auto n = static_cast<Eigen::Index>(cfg_.text_tokens);
  const auto d = static_cast<Eigen::Index>(cfg_.width);
  for (const auto& q : batch) {
    const Matrix text = ConstMap(q.embedding.get().data(), n, d);
    AttentionOutput o;
    const Matrix v = forward(q.state.get(), q.time, text, nullptr, q.capture ? capture_layers : std::span<const int>{},
                             &o.snapshots);
    o.velocity = Grid(q.state.get().dims());
    Eigen::Map<Matrix>(o.velocity.data(), v.rows(), v.cols()) = v;
    if (!all_finite(o.velocity)) fail(ErrorKind::Domain, "model produced a non-finite velocity");
    outs.push_back(std::move(o));
  }
  return outs;
}

double ToyDiT::loss_and_gradient(const Grid& x, double t, flow::ConditionId c, const Grid& target,
                                 ToyDiTWeights* grad) const {
  if (x.dims() != geometry() || target.dims() != geometry()) fail(ErrorKind::Shape, "sample dims differ from model");
  if (!has_condition(c)) fail(ErrorKind::Condition, "unknown condition label " + std::to_string(c.label));
  const auto M = static_cast<Eigen::Index>(cfg_.geometry.tokens());
  const auto D = static_cast<Eigen::Index>(cfg_.geometry.channels);
  const auto n = static_cast<Eigen::Index>(cfg_.text_tokens);
  const double scale = 1.0 / std::sqrt(double(cfg_.width));

  const Matrix text = w_.embed.middleRows(c.label * n, n);
  Cache cache;
  const Matrix out = forward(x, t, text, grad ? &cache : nullptr, {}, nullptr);
  const Matrix resid = out - ConstMap(target.data(), M, D);
  const double count = double(M * D);
  const double loss = resid.squaredNorm() / count;
  if (!grad) return loss;

  ToyDiTWeights& g = *grad;
  const Matrix d_out = resid * (2.0 / count);
  const auto lat = cache.h_final.bottomRows(M);
  g.w_out += lat.transpose() * d_out;
  g.b_out += d_out.colwise().sum();
  Matrix dH = Matrix::Zero(cache.h_final.rows(), cache.h_final.cols());
  dH.bottomRows(M) = d_out * w_.w_out.transpose();

  for (std::size_t l = w_.blocks.size(); l-- > 0;) {
    const BlockWeights& b = w_.blocks[l];
    BlockWeights& gb = g.blocks[l];
    Cache::Block& c_ = cache.blocks[l];
    // MLP residual
    const Matrix R = c_.z.cwiseMax(0.0);
    gb.w2 += R.transpose() * dH;
    gb.b2 += dH.colwise().sum();
    Matrix dZ = (dH * b.w2.transpose()).cwiseProduct((c_.z.array() > 0.0).cast<double>().matrix());
    gb.w1 += c_.h1.transpose() * dZ;
    gb.b1 += dZ.colwise().sum();
    const Matrix dH1 = dH + dZ * b.w1.transpose();
    // attention residual
    gb.wo += c_.o.transpose() * dH1;
    const Matrix dO = dH1 * b.wo.transpose();
    Matrix dS;  // holds dA first
    dS.noalias() = dO * c_.v.transpose();
    Matrix dV;
    dV.noalias() = c_.a.transpose() * dO;
    const Eigen::VectorXd inner = (dS.cwiseProduct(c_.a)).rowwise().sum();
    dS.colwise() -= inner;
    dS.array() *= c_.a.array();
    Matrix dQ, dK;
    dQ.noalias() = scale * dS * c_.k;
    dK.noalias() = scale * dS.transpose() * c_.q;
    gb.wq += c_.h.transpose() * dQ;
    gb.wk += c_.h.transpose() * dK;
    gb.wv += c_.h.transpose() * dV;
    dH = dH1 + dQ * b.wq.transpose() + dK * b.wk.transpose() + dV * b.wv.transpose();
  }
  const auto dLat = dH.bottomRows(M);
  const RowVector col = dLat.colwise().sum();
  g.embed.middleRows(c.label * n, n) += dH.topRows(n);
  g.embed.middleRows(c.label * n, n).rowwise() += (col * w_.w_pool.transpose()) / double(n);
  g.w_pool += text.colwise().mean().transpose() * col;
  g.w_in += cache.x.transpose() * dLat;
  g.b_in += col;
  g.w_time += cache.phi.transpose() * col;
  g.b_time += col;
  return loss;
}

Grid velocity_target(const flow::Schedule& sched, const Grid& x0, const Grid& eps, double t) {
  if (!x0.same_shape(eps)) fail(ErrorKind::Shape, "velocity_target: dims differ");
  if (sched.family() == flow::Family::FlowMatching) {
    return scaled(elementwise(eps, x0, ElementOp::Sub), 1.0 / sched.horizon());
  }
  const double ab = sched.alpha_bar(t);
  if (!(ab < 1.0)) fail(ErrorKind::SingularTime, "vp-sde target is undefined at t = 0");
  const Grid xt = flow::forward_marginal(sched, x0, t, eps);
  return flow::velocity_from_score(sched, xt, t, scaled(eps, -1.0 / std::sqrt(1.0 - ab)));
}

namespace {

struct Probe {
  std::size_t clip;
  double t;
  Grid eps;
};

double draw_time(const flow::Schedule& sched, const TrainOptions& opt, double u) {
  const double lo = sched.family() == flow::Family::VpSde ? opt.t_min * sched.horizon() : 0.0;
  return lo + (sched.horizon() - lo) * u;
}

double probe_loss(const ToyDiT& model, const std::vector<ToyClip>& data, const flow::Schedule& sched,
                  const std::vector<Probe>& probes) {
  double total = 0.0;
  for (const auto& p : probes) {
    const Grid& x0 = data[p.clip].video;
    const Grid xt = flow::forward_marginal(sched, x0, p.t, p.eps);
    total += model.loss_and_gradient(xt, p.t, data[p.clip].label, velocity_target(sched, x0, p.eps, p.t), nullptr);
  }
  return total / double(probes.size());
}

}  // namespace

TrainReport train_toydit(ToyDiT& model, const std::vector<ToyClip>& data, const flow::Schedule& sched,
                         const TrainOptions& opt, const RngStream& rng) {
  if (data.empty()) fail(ErrorKind::Data, "training set is empty");
  for (const auto& clip : data) {
    if (clip.video.dims() != model.geometry()) fail(ErrorKind::Shape, "training clip dims differ from the model");
    if (!model.has_condition(clip.label)) fail(ErrorKind::Condition, "training clip has an unknown label");
  }
  if (sched.family() != model.config().family || sched.horizon() != model.config().horizon) {
    fail(ErrorKind::Parameter, "schedule family or horizon differs from the model");
  }
  if (opt.batch == 0 || !(opt.lr >= 0.0)) fail(ErrorKind::Parameter, "batch must be >= 1 and lr >= 0");

  // Probe set: fixed clips, times and noise, so the curve is comparable
  // across epochs (and constant when nothing is learned).
  std::vector<Probe> probes;
  const std::size_t np = std::max<std::size_t>(1, std::min(opt.probe_items, data.size()));
  const RngStream probe_rng = rng.fork(1);
  for (std::size_t j = 0; j < np; ++j) {
    const double u = probe_rng.uniform_at(2 * j, 1)[0];
    probes.push_back({j * data.size() / np, draw_time(sched, opt, u), probe_rng.gaussian_at(2 * j + 1, model.geometry())});
  }

  TrainReport report;
  report.baseline_probe_loss = probe_loss(model, data, sched, probes);
  report.curve.push_back({0, std::numeric_limits<double>::quiet_NaN(), report.baseline_probe_loss});

  ToyDiTWeights& w = model.weights();
  ToyDiTWeights m1 = w.zeros_like(), m2 = w.zeros_like();
  RngStream order = rng.fork(2);
  const RngStream draws = rng.fork(3);
  std::uint64_t sample_index = 0;
  std::uint64_t step = 0;
  std::vector<std::size_t> perm(data.size());

  for (std::size_t epoch = 1; epoch <= opt.epochs; ++epoch) {
    for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
    for (std::size_t i = perm.size(); i > 1; --i) std::swap(perm[i - 1], perm[order.below(i)]);

    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < perm.size(); start += opt.batch) {
      const std::size_t end = std::min(perm.size(), start + opt.batch);
      ToyDiTWeights g = w.zeros_like();
      for (std::size_t k = start; k < end; ++k) {
        const ToyClip& clip = data[perm[k]];
        const double t = draw_time(sched, opt, draws.uniform_at(2 * sample_index, 1)[0]);
        const Grid eps = draws.gaussian_at(2 * sample_index + 1, model.geometry());
        ++sample_index;
        const Grid xt = flow::forward_marginal(sched, clip.video, t, eps);
        epoch_loss += model.loss_and_gradient(xt, t, clip.label, velocity_target(sched, clip.video, eps, t), &g);
      }
      const double inv = 1.0 / double(end - start);
      ++step;
      const double c1 = 1.0 - std::pow(opt.beta1, double(step));
      const double c2 = 1.0 - std::pow(opt.beta2, double(step));
      // Walk the three weight sets in lockstep; for_each order is fixed.
      std::vector<Matrix*> gs, a, b;
      g.for_each([&](const std::string&, Matrix& x) { gs.push_back(&x); });
      m1.for_each([&](const std::string&, Matrix& x) { a.push_back(&x); });
      m2.for_each([&](const std::string&, Matrix& x) { b.push_back(&x); });
      std::size_t idx = 0;
      w.for_each([&](const std::string&, Matrix& p) {
        const Matrix gi = *gs[idx] * inv;
        *a[idx] = opt.beta1 * *a[idx] + (1.0 - opt.beta1) * gi;
        *b[idx] = opt.beta2 * *b[idx] + (1.0 - opt.beta2) * gi.cwiseProduct(gi);
        const Matrix denom = ((*b[idx] / c2).array().sqrt() + opt.adam_eps).matrix();
        p -= (opt.lr * (*a[idx] / c1).array() / denom.array()).matrix();
        ++idx;
      });
    }
    epoch_loss /= double(data.size());
    if (!std::isfinite(epoch_loss)) fail(ErrorKind::Domain, "training diverged");
    const bool probe_now = (opt.probe_every > 0 && epoch % opt.probe_every == 0) || epoch == opt.epochs;
    const double pl = probe_now ? probe_loss(model, data, sched, probes) : std::numeric_limits<double>::quiet_NaN();
    report.curve.push_back({epoch, epoch_loss, pl});
  }
  report.final_probe_loss = probe_loss(model, data, sched, probes);
  return report;
}

void save_checkpoint(const ToyDiT& model, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const ToyDiTConfig& c = model.config();
  std::ostringstream man;
  man << "format=dfv-toydit\nversion=1\n"
      << "frames=" << c.geometry.frames << "\nheight=" << c.geometry.height << "\nwidth=" << c.geometry.width
      << "\nchannels=" << c.geometry.channels << "\nembed_width=" << c.width << "\nblocks=" << c.blocks
      << "\ntext_tokens=" << c.text_tokens << "\nconditions=" << c.conditions << "\nmlp_hidden=" << c.mlp_hidden
      << "\nfamily=" << flow::to_string(c.family) << "\nhorizon=" << std::setprecision(17) << c.horizon << "\n";
  model.weights().for_each([&](const std::string& name, const Matrix& m) {
    Grid g({static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols())});
    Eigen::Map<Matrix>(g.data(), m.rows(), m.cols()) = m;
    const std::string file = name + ".dfvt";
    save_dfvt(dir / file, g);
    man << "param." << name << "=" << file << "\n";
  });
  std::ofstream out(dir / "manifest.txt", std::ios::binary);
  out << man.str();
  if (!out) fail(ErrorKind::Io, "cannot write " + (dir / "manifest.txt").string());
}

ToyDiT load_checkpoint(const std::filesystem::path& dir) {
  std::ifstream in(dir / "manifest.txt");
  if (!in) fail(ErrorKind::Io, "cannot read " + (dir / "manifest.txt").string());
  std::map<std::string, std::string> kv;
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.find('=');
    if (line.empty() || eq == std::string::npos) continue;
    kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  auto need = [&](const std::string& k) -> const std::string& {
    auto it = kv.find(k);
    if (it == kv.end()) fail(ErrorKind::Format, "checkpoint manifest lacks key '" + k + "'");
    return it->second;
  };
  auto num = [&](const std::string& k) { return static_cast<std::size_t>(std::stoull(need(k))); };
  if (need("format") != "dfv-toydit" || need("version") != "1") fail(ErrorKind::Format, "not a toy DiT checkpoint");

  ToyDiTConfig c;
  c.geometry = {num("frames"), num("height"), num("width"), num("channels")};
  c.width = num("embed_width");
  c.blocks = num("blocks");
  c.text_tokens = num("text_tokens");
  c.conditions = num("conditions");
  c.mlp_hidden = num("mlp_hidden");
  c.family = flow::parse_family(need("family"));
  c.horizon = std::stod(need("horizon"));

  // Shapes come from a zero-initialised model of the same config.
  ToyDiTWeights w = ToyDiT(c, RngStream(0)).weights();
  w.for_each([&](const std::string& name, Matrix& m) {
    const Grid g = load_dfvt(dir / need("param." + name));
    if (g.rank() != 2 || g.dims()[0] != static_cast<std::size_t>(m.rows()) ||
        g.dims()[1] != static_cast<std::size_t>(m.cols())) {
      fail(ErrorKind::Shape, "checkpoint tensor '" + name + "' has wrong dims");
    }
    m = ConstMap(g.data(), m.rows(), m.cols());
  });
  return ToyDiT(c, std::move(w));
}

}  // namespace dfv::toy
