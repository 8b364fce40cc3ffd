// Copyright (c) 2026, The avikit Authors. All rights reserved.
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

#include "avikit/attack/decision.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <numbers>
#include <thread>

#include "avikit/core/error.hpp"
#include "avikit/core/rng.hpp"

namespace avikit {
namespace {

using Vec = std::vector<double>;

double dot(const Vec& a, const Vec& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm(const Vec& a) { return std::sqrt(dot(a, a)); }

double distance(const Vec& a, const Vec& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

Vec quantized(Vec v) {
  for (double& x : v) x = quantize_sample(x) / 255.0;
  return v;
}

ImageBuf to_image(const Vec& v, std::size_t h, std::size_t w) {
  ImageBuf out(h, w);
  for (std::size_t i = 0; i < v.size(); ++i) out.data[i] = quantize_sample(v[i]);
  return out;
}

// Gaussian noise on a grid x grid lattice, bilinearly upsampled (pixel
// centres, clamped edges). grid == 0 draws full-resolution noise.
Vec low_frequency(Rng& rng, std::size_t grid, std::size_t h, std::size_t w) {
  Vec out(h * w * kChannels);
  if (grid == 0 || grid >= std::min(h, w)) {
    for (double& v : out) v = rng.normal();
    return out;
  }
  Vec z(grid * grid * kChannels);
  for (double& v : z) v = rng.normal();
  const auto axis = [grid](std::size_t n, std::size_t i, std::size_t& i0, std::size_t& i1, double& f) {
    const double pos = (static_cast<double>(i) + 0.5) * static_cast<double>(grid) / static_cast<double>(n) - 0.5;
    const double fl = std::floor(pos);
    const long lo = std::clamp(static_cast<long>(fl), 0L, static_cast<long>(grid) - 1);
    i0 = static_cast<std::size_t>(lo);
    i1 = std::min(i0 + 1, grid - 1);
    f = std::clamp(pos - static_cast<double>(lo), 0.0, 1.0);
  };
  for (std::size_t y = 0; y < h; ++y) {
    std::size_t y0, y1;
    double fy;
    axis(h, y, y0, y1, fy);
    for (std::size_t x = 0; x < w; ++x) {
      std::size_t x0, x1;
      double fx;
      axis(w, x, x0, x1, fx);
      for (std::size_t c = 0; c < kChannels; ++c) {
        const auto g = [&](std::size_t a, std::size_t b) { return z[(a * grid + b) * kChannels + c]; };
        const double top = g(y0, x0) * (1 - fx) + g(y0, x1) * fx;
        const double bot = g(y1, x0) * (1 - fx) + g(y1, x1) * fx;
        out[(y * w + x) * kChannels + c] = top * (1 - fy) + bot * fy;
      }
    }
  }
  return out;
}

// Coarse-to-fine proposal lattices shared by both refinements.
constexpr std::size_t kGrids[] = {2, 4, 8, 0};
constexpr std::size_t kGridCount = std::size(kGrids);

// Query helper for a refinement stage: keeps one query in reserve for the
// final re-check and guards against loops that only hit the cache.
class Stage {
 public:
  Stage(AdvOracle& ao, QueryBudget& budget, std::size_t h, std::size_t w)
      : ao_(ao), budget_(budget), h_(h), w_(w), max_attempts_(8 * budget.remaining() + 64) {}

  bool can_query() const { return budget_.remaining() > 1 && attempts_ < max_attempts_; }

  bool adversarial(const Vec& x) {
    ++attempts_;
    return ao_.is_adversarial(to_image(x, h_, w_), budget_);
  }

  RefineResult finish(const Vec& x, const ImageBuf& input) {
    RefineResult r;
    r.budget_exhausted = budget_.remaining() <= 1;
    r.image = to_image(x, h_, w_);
    if (r.image == input) return r;
    if (budget_.remaining() == 0 || !ao_.is_adversarial(r.image, budget_, /*bypass_cache=*/true)) {
      r.image = input;
      r.verified = false;
    }
    return r;
  }

 private:
  AdvOracle& ao_;
  QueryBudget& budget_;
  std::size_t h_, w_;
  std::size_t attempts_ = 0;
  std::size_t max_attempts_;
};

}  // namespace

AdvOracle::AdvOracle(OracleHandle& oracle, const VisualInstruction& instruction, ScoringOptions scoring)
    : oracle_(oracle), instruction_(instruction), scoring_(scoring) {}

double AdvOracle::score(const ImageBuf& image, QueryBudget& budget, bool bypass_cache) {
  const std::string response = oracle_.query(OracleImage(image), instruction_.prompt, &budget, bypass_cache);
  return score_response(instruction_.task, response, instruction_.ground_truth, scoring_);
}

PatchRect patch_rect(std::size_t height, std::size_t width, std::size_t grid, std::size_t row, std::size_t col) {
  return {row * height / grid, (row + 1) * height / grid, col * width / grid, (col + 1) * width / grid};
}

std::vector<std::size_t> par_grids(std::size_t height, std::size_t width, const AttackConfig& config) {
  const std::size_t side = std::min(height, width);
  std::vector<std::size_t> grids;
  std::size_t g = std::max<std::size_t>(1, std::min(config.par_grid, side));
  grids.push_back(g);
  while (side / (2 * g) >= config.par_min_patch) {
    g *= 2;
    grids.push_back(g);
  }
  return grids;
}

std::optional<ImageBuf> init_gaussian_attack(AdvOracle& ao, QueryBudget& budget, std::uint64_t seed,
                                             const AttackConfig& config) {
  const ImageBuf& clean = ao.instruction().image;
  if (ao.is_adversarial(clean, budget)) throw Error(ErrorCode::PreAttackZero, ao.instruction().id);
  QueryBudget pool(config.init_cap, &budget);
  const UnitImage x0 = to_unit(clean);
  Rng rng(seed);
  for (std::size_t k = 1; k <= config.init_cap; ++k) {
    const double sigma = config.sigma_step * static_cast<double>(k);
    ImageBuf sample(clean.height, clean.width);
    for (std::size_t i = 0; i < x0.data.size(); ++i) sample.data[i] = quantize_sample(x0.data[i] + sigma * rng.normal());
    if (pool.exhausted()) break;
    if (ao.is_adversarial(sample, pool)) return sample;
  }
  return std::nullopt;
}

ParResult par_refine(AdvOracle& ao, const ImageBuf& clean, const ImageBuf& adv, QueryBudget& budget,
                     const AttackConfig& config) {
  if (!clean.valid() || clean.height != adv.height || clean.width != adv.width) {
    throw Error(ErrorCode::ShapeMismatch, "PAR clean/adversarial sizes differ");
  }
  ParResult result;
  result.image = adv;
  ImageBuf& x = result.image;
  const std::size_t h = clean.height, w = clean.width;

  const auto patch_norm = [&](const PatchRect& r) {
    double s = 0.0;
    for (std::size_t y = r.y0; y < r.y1; ++y) {
      for (std::size_t i = (y * w + r.x0) * kChannels; i < (y * w + r.x1) * kChannels; ++i) {
        const double d = (static_cast<double>(x.data[i]) - clean.data[i]) / 255.0;
        s += d * d;
      }
    }
    return std::sqrt(s);
  };

  for (std::size_t grid : par_grids(h, w, config)) {
    PatchLevel level;
    level.grid = grid;
    level.state.assign(grid * grid, PatchState::Untried);
    level.magnitude.assign(grid * grid, 0.0);
    for (std::size_t p = 0; p < grid * grid; ++p) {
      level.magnitude[p] = patch_norm(patch_rect(h, w, grid, p / grid, p % grid));
      if (level.magnitude[p] == 0.0) level.state[p] = PatchState::Restored;
    }
    while (true) {
      // Highest remaining magnitude first; ties go to the lower row-major index.
      std::size_t best = grid * grid;
      for (std::size_t p = 0; p < grid * grid; ++p) {
        if (level.state[p] != PatchState::Untried) continue;
        if (best == grid * grid || level.magnitude[p] > level.magnitude[best]) best = p;
      }
      if (best == grid * grid) break;
      if (budget.exhausted()) {
        result.budget_exhausted = true;
        break;
      }
      const PatchRect r = patch_rect(h, w, grid, best / grid, best % grid);
      ImageBuf trial = x;
      for (std::size_t y = r.y0; y < r.y1; ++y) {
        const std::size_t a = (y * w + r.x0) * kChannels, b = (y * w + r.x1) * kChannels;
        std::copy(clean.data.begin() + static_cast<long>(a), clean.data.begin() + static_cast<long>(b),
                  trial.data.begin() + static_cast<long>(a));
      }
      if (ao.is_adversarial(trial, budget)) {
        x = std::move(trial);
        level.state[best] = PatchState::Restored;
        level.magnitude[best] = 0.0;
      } else {
        level.state[best] = PatchState::Sensitive;
      }
    }
    result.masks.levels.push_back(std::move(level));
    if (result.budget_exhausted) break;
  }
  return result;
}

RefineResult boundary_refine(AdvOracle& ao, const ImageBuf& clean, const ImageBuf& adv, QueryBudget& budget,
                             std::uint64_t seed) {
  const std::size_t h = clean.height, w = clean.width;
  Stage stage(ao, budget, h, w);
  const Vec x0 = to_unit(clean).data;
  Vec x = to_unit(adv).data;
  Rng rng(seed);

  double spherical = 0.05, source = 0.05;
  std::size_t grid = 0, step = 0;
  std::vector<bool> spherical_hits, step_hits;
  const auto rate = [](std::vector<bool>& v) {
    const double r = static_cast<double>(std::count(v.begin(), v.end(), true)) / static_cast<double>(v.size());
    v.clear();
    return r;
  };

  while (stage.can_query()) {
    Vec diff(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) diff[i] = x0[i] - x[i];
    const double radius = norm(diff);
    if (radius == 0.0) break;

    // Orthogonal step on the sphere around the clean image...
    Vec eta = low_frequency(rng, kGrids[grid], h, w);
    const double along = dot(eta, diff) / (radius * radius);
    for (std::size_t i = 0; i < eta.size(); ++i) eta[i] -= along * diff[i];
    const double eta_norm = norm(eta);
    if (eta_norm == 0.0) continue;
    for (double& v : eta) v *= spherical * radius / eta_norm;
    const double shrink = 1.0 / std::sqrt(spherical * spherical + 1.0);
    Vec on_sphere(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) on_sphere[i] = std::clamp(x0[i] + shrink * (eta[i] - diff[i]), 0.0, 1.0);

    // ...then a step toward it.
    Vec to_clean(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) to_clean[i] = x0[i] - on_sphere[i];
    const double gap = norm(to_clean);
    if (gap == 0.0) break;
    const double move = std::max(source * radius + gap - radius, 0.0) / gap;
    Vec candidate(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) candidate[i] = on_sphere[i] + move * to_clean[i];
    candidate = quantized(std::move(candidate));

    if (step % 5 == 0) {
      spherical_hits.push_back(stage.adversarial(quantized(on_sphere)));
      if (!stage.can_query()) break;
    }
    ++step;
    const bool ok = stage.adversarial(candidate);
    step_hits.push_back(ok);
    if (ok && distance(candidate, x0) <= radius) x = std::move(candidate);

    if (spherical_hits.size() >= 10) {
      const double r = rate(spherical_hits);
      if (r > 0.5) {
        spherical *= 1.5;
        source *= 1.5;
      } else if (r < 0.2) {
        spherical /= 1.5;
        source /= 1.5;
      }
    }
    if (step_hits.size() >= 10) {
      const double r = rate(step_hits);
      if (r > 0.25) {
        source *= 1.5;
      } else if (r < 0.1) {
        source /= 1.5;
      }
    }
    if (source < 0.002 && grid + 1 < kGridCount) {
      ++grid;
      spherical = source = 0.05;
      spherical_hits.clear();
      step_hits.clear();
    }
  }
  return stage.finish(x, adv);
}

RefineResult surfree_refine(AdvOracle& ao, const ImageBuf& clean, const ImageBuf& adv, QueryBudget& budget,
                            std::uint64_t seed) {
  constexpr double kHalfPi = std::numbers::pi / 2;
  constexpr double kTolerance = std::numbers::pi / 180;  // 1 degree
  constexpr std::size_t kSearchCap = 50;
  constexpr double kRho = 0.95;
  constexpr std::size_t kStallWindow = 30;
  constexpr double kStallGain = 0.999;

  const std::size_t h = clean.height, w = clean.width;
  Stage stage(ao, budget, h, w);
  const Vec x0 = to_unit(clean).data;
  Vec x = to_unit(adv).data;
  Rng rng(seed);

  double theta_max = std::numbers::pi / 6;
  std::size_t grid = 0, directions = 0;
  double window_start = distance(x, x0);

  while (stage.can_query()) {
    Vec u(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) u[i] = x[i] - x0[i];
    const double eps = norm(u);
    if (eps == 0.0) break;
    for (double& v : u) v /= eps;

    // Escalate to finer directions once a window of directions stops paying off.
    if (++directions % kStallWindow == 0) {
      if (eps > window_start * kStallGain && grid + 1 < kGridCount) ++grid;
      window_start = eps;
    }
    Vec v = low_frequency(rng, kGrids[grid], h, w);
    const double along = dot(v, u);
    for (std::size_t i = 0; i < v.size(); ++i) v[i] -= along * u[i];
    const double vn = norm(v);
    if (vn == 0.0) continue;
    for (double& e : v) e /= vn;

    // Point at angle t on the circle through x and x0 spanned by u and v.
    const auto z = [&](double t) {
      Vec p(x.size());
      for (std::size_t i = 0; i < x.size(); ++i) p[i] = x0[i] + eps * std::cos(t) * (std::cos(t) * u[i] + std::sin(t) * v[i]);
      return quantized(std::move(p));
    };

    double found = 0.0;
    for (double sign : {1.0, -1.0}) {
      if (!stage.can_query()) break;
      if (stage.adversarial(z(sign * theta_max))) {
        found = sign * theta_max;
        break;
      }
    }
    if (found == 0.0) {
      theta_max *= kRho;
      continue;
    }
    theta_max = std::min(theta_max / kRho, 0.9 * kHalfPi);

    const double sign = found > 0 ? 1.0 : -1.0;
    double lo = std::abs(found), hi = kHalfPi;
    for (std::size_t k = 0; k < kSearchCap && stage.can_query(); ++k) {
      const double up = lo * 1.5;
      if (up >= kHalfPi) break;
      if (!stage.adversarial(z(sign * up))) {
        hi = up;
        break;
      }
      lo = up;
    }
    for (std::size_t k = 0; k < kSearchCap && hi - lo > kTolerance && stage.can_query(); ++k) {
      const double mid = 0.5 * (lo + hi);
      if (stage.adversarial(z(sign * mid))) {
        lo = mid;
      } else {
        hi = mid;
      }
    }
    Vec candidate = z(sign * lo);
    if (distance(candidate, x0) < eps) x = std::move(candidate);
  }
  return stage.finish(x, adv);
}

std::uint64_t attack_seed(std::uint64_t seed, std::string_view id) noexcept {
  return hash_combine(seed, fnv1a64(id));
}

AttackOutcome attack_pipeline(AdvOracle& ao, std::uint64_t seed, const AttackConfig& config) {
  const ImageBuf& clean = ao.instruction().image;
  QueryBudget total(config.total_budget);
  AttackOutcome out;
  out.seed = seed;
  const auto done = [&]() -> AttackOutcome& {
    out.queries_used = total.used();
    return out;
  };

  out.pre_score = ao.score(clean, total);
  if (out.pre_score == 0.0) throw Error(ErrorCode::PreAttackZero, ao.instruction().id);

  const auto init = init_gaussian_attack(ao, total, hash_combine(seed, 1), config);
  if (!init) return done();

  // Three queries stay back: the PAR re-check and one per refinement pool.
  const std::size_t reserve = 3;
  QueryBudget par_pool(total.remaining() > reserve ? total.remaining() - reserve : 0, &total);
  const ParResult par = par_refine(ao, clean, *init, par_pool, config);
  if (total.exhausted() || !ao.is_adversarial(par.image, total, /*bypass_cache=*/true)) return done();

  out.success = true;
  out.adv_par = par.image;
  out.aed_par = l2_distance(clean, par.image);

  const std::size_t remaining = total.remaining();
  QueryBudget boundary_pool(remaining / 2, &total);
  const RefineResult pb = boundary_refine(ao, clean, par.image, boundary_pool, hash_combine(seed, 2));
  QueryBudget surfree_pool(remaining - remaining / 2, &total);
  const RefineResult ps = surfree_refine(ao, clean, par.image, surfree_pool, hash_combine(seed, 3));

  out.adv_par_boundary = pb.image;
  out.aed_pb = l2_distance(clean, pb.image);
  out.adv_par_surfree = ps.image;
  out.aed_ps = l2_distance(clean, ps.image);
  return done();
}

void attack_suite(const Dataset& dataset, OracleHandle& oracle, const AttackConfig& config, std::uint64_t seed,
                  const std::function<void(const AttackRecord&)>& sink, std::size_t parallel) {
  const auto run = [&](std::size_t i) {
    const VisualInstruction& vi = dataset.items[i];
    AttackRecord rec;
    rec.source = &vi;
    rec.seed = attack_seed(seed, vi.id);
    AdvOracle ao(oracle, vi, config.scoring);
    try {
      rec.outcome = attack_pipeline(ao, rec.seed, config);
      rec.pre_score = rec.outcome->pre_score;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::PreAttackZero) throw;
      rec.pre_score = 0.0;
    }
    return rec;
  };

  parallel = std::max<std::size_t>(1, parallel);
  if (parallel == 1) {
    for (std::size_t i = 0; i < dataset.size(); ++i) sink(run(i));
    return;
  }
  std::vector<std::optional<AttackRecord>> records(dataset.size());
  std::vector<std::exception_ptr> errors(dataset.size());
  std::atomic<std::size_t> next{0};
  const auto work = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < dataset.size();) {
      try {
        records[i] = run(i);
      } catch (...) {
        errors[i] = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < std::min(parallel, dataset.size()); ++t) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    if (errors[i]) std::rethrow_exception(errors[i]);
    if (records[i]) sink(*records[i]);
  }
}

}  // namespace avikit
