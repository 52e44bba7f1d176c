#include "nexcp/property_suite.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <stdexcept>

#include <fmt/format.h>

namespace nexcp {

ExtendedReal scan_quantile(const DiscreteDistribution& dist, double tau) {
  if (!(tau >= 0.0 && tau <= 1.0)) throw std::domain_error("tau must lie in [0,1]");
  const auto atoms = dist.atoms();
  bool found = false;
  ExtendedReal best;
  for (const auto& candidate : atoms) {
    double cdf = 0.0;
    for (const auto& a : atoms) {
      if (a.value <= candidate.value) cdf += a.mass;
    }
    if (cdf >= tau - kMassTolerance && (!found || candidate.value < best)) {
      best = candidate.value;
      found = true;
    }
  }
  if (!found) {
    for (const auto& a : atoms) {
      if (!found || best < a.value) best = a.value;
      found = true;
    }
  }
  return best;
}

namespace {

constexpr double kBoundSlack = 1e-9;

class Recorder {
 public:
  explicit Recorder(std::string name) { result_.name = std::move(name); }

  void check(bool ok, const std::function<std::string()>& describe) {
    ++result_.cases;
    if (ok) return;
    if (result_.violations++ == 0) result_.first_failure = describe();
  }

  PropertyResult take() { return std::move(result_); }

 private:
  PropertyResult result_;
};

WeightProfile random_profile(RandomStream& rng, std::size_t max_n) {
  const std::size_t n = static_cast<std::size_t>(rng.below(max_n + 1));
  std::vector<double> w(n);
  for (auto& v : w) {
    const double u = rng.uniform();
    v = u < 0.15 ? 0.0 : (u < 0.35 ? 1.0 : rng.uniform());
  }
  return normalize_weights(w);
}

// Half the draws come from a five-value lattice so ties are common.
double random_score(RandomStream& rng, bool lattice) {
  return lattice ? static_cast<double>(rng.below(5)) : 10.0 * rng.uniform();
}

MassTable random_masses(RandomStream& rng, std::size_t size) {
  MassTable m(size);
  double total = 0.0;
  for (auto& v : m) {
    v = rng.uniform() < 0.2 ? 0.0 : rng.uniform();
    total += v;
  }
  if (total == 0.0) {
    m[rng.below(size)] = 1.0;
    return m;
  }
  for (auto& v : m) v /= total;
  return m;
}

PropertyResult quantile_vs_scan(const PropertySuiteOptions& opt, RandomStream rng) {
  Recorder rec("weighted_quantile matches cumulative scan");
  for (std::size_t c = 0; c < opt.fuzz; ++c) {
    const WeightProfile profile = random_profile(rng, 12);
    const bool lattice = rng.uniform() < 0.5;
    std::vector<Atom> atoms;
    const auto w = profile.normalized();
    double running = 0.0;
    std::vector<double> partial;
    for (std::size_t i = 0; i < w.size(); ++i) {
      ExtendedReal v = random_score(rng, lattice);
      const double u = rng.uniform();
      if (u < 0.05) v = ExtendedReal::pos_inf();
      if (u > 0.97) v = ExtendedReal::neg_inf();
      atoms.push_back({v, w[i]});
      running += w[i];
      partial.push_back(running);
    }
    // Every third case puts tau exactly on a cumulative mass.
    double tau = rng.uniform();
    if (c % 3 == 0) tau = std::min(1.0, partial[rng.below(partial.size())]);
    const DiscreteDistribution dist(std::move(atoms));
    const ExtendedReal got = opt.quantile(dist, tau);
    const ExtendedReal want = scan_quantile(dist, tau);
    rec.check(got == want, [&] {
      return fmt::format("case {}: tau {:.17g} gave {} but scan gives {}", c, tau, got.to_string(), want.to_string());
    });
  }
  return rec.take();
}

PropertyResult quantile_monotone(const PropertySuiteOptions& opt, RandomStream rng) {
  Recorder rec("weighted_quantile is nondecreasing in tau");
  for (std::size_t c = 0; c < opt.fuzz; ++c) {
    const WeightProfile profile = random_profile(rng, 12);
    const bool lattice = rng.uniform() < 0.5;
    std::vector<Atom> atoms;
    for (double m : profile.normalized()) atoms.push_back({random_score(rng, lattice), m});
    const DiscreteDistribution dist(std::move(atoms));
    double a = rng.uniform();
    double b = rng.uniform();
    if (a > b) std::swap(a, b);
    const ExtendedReal qa = opt.quantile(dist, a);
    const ExtendedReal qb = opt.quantile(dist, b);
    rec.check(qa <= qb, [&] { return fmt::format("case {}: Q({}) = {} > Q({}) = {}", c, a, qa.to_string(), b, qb.to_string()); });
  }
  return rec.take();
}

PropertyResult strangeness_full_bound(const PropertySuiteOptions& opt, RandomStream rng) {
  Recorder rec("full-conformal strangeness mass <= alpha");
  for (std::size_t c = 0; c < opt.fuzz; ++c) {
    const WeightProfile profile = random_profile(rng, 15);
    const bool lattice = rng.uniform() < 0.5;
    std::vector<double> r(profile.n() + 1);
    for (auto& v : r) v = random_score(rng, lattice);
    const double alpha = 0.01 + 0.98 * rng.uniform();
    const StrangenessSet s = strangeness_full(r, profile, alpha, opt.quantile);
    rec.check(s.weighted_mass <= alpha + kBoundSlack, [&] {
      return fmt::format("case {}: mass {:.17g} > alpha {:.17g} (n = {})", c, s.weighted_mass, alpha, profile.n());
    });
  }
  return rec.take();
}

PropertyResult strangeness_jackknife_bound(const PropertySuiteOptions& opt, RandomStream rng) {
  Recorder rec("jackknife strangeness mass <= 2 alpha");
  for (std::size_t c = 0; c < opt.fuzz; ++c) {
    const WeightProfile profile = random_profile(rng, 10);
    const auto m = static_cast<Eigen::Index>(profile.n() + 1);
    const bool lattice = rng.uniform() < 0.5;
    Eigen::MatrixXd r(m, m);
    for (Eigen::Index i = 0; i < m; ++i) {
      for (Eigen::Index j = 0; j < m; ++j) r(i, j) = i == j ? 0.0 : random_score(rng, lattice);
    }
    const double alpha = 0.01 + 0.48 * rng.uniform();
    const StrangenessSet s = strangeness_jackknife(r, profile, alpha);
    rec.check(s.weighted_mass <= 2.0 * alpha + kBoundSlack, [&] {
      return fmt::format("case {}: mass {:.17g} > 2 alpha = {:.17g}", c, s.weighted_mass, 2.0 * alpha);
    });
  }
  return rec.take();
}

PropertyResult swap_distance_bound(const PropertySuiteOptions& opt, RandomStream rng) {
  Recorder rec("swapped joint TV <= 2d - d^2");
  const std::size_t cases = std::max<std::size_t>(100, opt.fuzz / 100);
  for (std::size_t c = 0; c < cases; ++c) {
    const std::size_t coords = 2 + static_cast<std::size_t>(rng.below(4));
    const std::size_t support = 2 + static_cast<std::size_t>(rng.below(3));
    std::vector<MassTable> marginals;
    for (std::size_t j = 0; j < coords; ++j) marginals.push_back(random_masses(rng, support));
    const std::size_t i = static_cast<std::size_t>(rng.below(coords - 1));
    bool ok = true;
    std::string detail;
    try {
      const SwapDistance res = swap_distance_check(marginals, i);
      ok = res.exact_tv <= res.bound + 1e-12;
      detail = fmt::format("exact {:.17g}, bound {:.17g}", res.exact_tv, res.bound);
    } catch (const std::logic_error& e) {
      ok = false;
      detail = e.what();
    }
    rec.check(ok, [&] { return fmt::format("case {}: {}", c, detail); });
  }
  return rec.take();
}

PropertyResult dmix_dominates_tv(const PropertySuiteOptions& opt, RandomStream rng) {
  Recorder rec("d_mix >= d_TV");
  const std::size_t cases = std::max<std::size_t>(1000, opt.fuzz / 10);
  for (std::size_t c = 0; c < cases; ++c) {
    const std::size_t support = 2 + static_cast<std::size_t>(rng.below(5));
    const MassTable p = random_masses(rng, support);
    const MassTable q = random_masses(rng, support);
    const double dmix = dmix_discrete(p, q);
    const double tv = tv_discrete(p, q);
    rec.check(dmix >= tv - 1e-12, [&] { return fmt::format("case {}: dmix {:.17g} < tv {:.17g}", c, dmix, tv); });
  }
  return rec.take();
}

PropertyResult tv_metric(const PropertySuiteOptions& opt, RandomStream rng) {
  Recorder rec("d_TV is a metric bounded by 1");
  const std::size_t cases = std::max<std::size_t>(1000, opt.fuzz / 10);
  for (std::size_t c = 0; c < cases; ++c) {
    const std::size_t support = 1 + static_cast<std::size_t>(rng.below(6));
    const MassTable p = random_masses(rng, support);
    const MassTable q = random_masses(rng, support);
    const MassTable r = random_masses(rng, support);
    const double pq = tv_discrete(p, q);
    const double qp = tv_discrete(q, p);
    const double pr = tv_discrete(p, r);
    const double rq = tv_discrete(r, q);
    const bool ok = pq == qp && pq >= 0.0 && pq <= 1.0 + 1e-12 && tv_discrete(p, p) == 0.0 && pq <= pr + rq + 1e-12;
    rec.check(ok, [&] { return fmt::format("case {}: d(p,q) {:.17g}, d(q,p) {:.17g}, d(p,r)+d(r,q) {:.17g}", c, pq, qp, pr + rq); });
  }
  return rec.take();
}

PropertyResult gap_bounds(const PropertySuiteOptions&) {
  Recorder rec("drift and changepoint sums within closed forms");
  for (int a = 0; a < 20; ++a) {
    const double rho = 0.05 + 0.049 * a;  // 0.05 .. 0.981
    for (int b = 0; b < 20; ++b) {
      const std::size_t n = 1 + static_cast<std::size_t>(b) * 25;
      const double eps = 0.001 * (b + 1);
      const std::size_t k = static_cast<std::size_t>(b) * n / 19;
      bool ok = true;
      std::string detail;
      try {
        const GapBound drift = drift_gap_bound(eps, rho, n);
        const GapBound change = changepoint_gap_bound(rho, k, n);
        ok = drift.exact_sum <= drift.closed_form * (1.0 + 1e-12) && change.exact_sum <= change.closed_form * (1.0 + 1e-12);
        detail = fmt::format("drift {} vs {}, changepoint {} vs {}", drift.exact_sum, drift.closed_form,
                             change.exact_sum, change.closed_form);
      } catch (const std::logic_error& e) {
        ok = false;
        detail = e.what();
      }
      rec.check(ok, [&] { return fmt::format("rho {}, n {}, k {}: {}", rho, n, k, detail); });
    }
  }
  return rec.take();
}

}  // namespace

std::vector<PropertyResult> run_property_suite(const PropertySuiteOptions& options) {
  if (!options.quantile) throw std::invalid_argument("no quantile routine given");
  const RandomStream root(options.seed);
  std::vector<PropertyResult> out;
  out.push_back(quantile_vs_scan(options, root.derive(1)));
  out.push_back(quantile_monotone(options, root.derive(2)));
  out.push_back(strangeness_full_bound(options, root.derive(3)));
  out.push_back(strangeness_jackknife_bound(options, root.derive(4)));
  out.push_back(swap_distance_bound(options, root.derive(5)));
  out.push_back(dmix_dominates_tv(options, root.derive(6)));
  out.push_back(tv_metric(options, root.derive(7)));
  out.push_back(gap_bounds(options));
  return out;
}

}  // namespace nexcp
