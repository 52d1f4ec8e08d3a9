#include "rmt/secular.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "rmt/errors.hpp"

namespace rmt
{

namespace
{

constexpr double eps = std::numeric_limits<double>::epsilon();
const Complex I(0.0, 1.0);

double max_abs_pole(const SecularFunction &f)
{
  return f.size() == 0 ? 0.0 : f.poles.cwiseAbs().maxCoeff();
}

// Index of the pole nearest to s and its distance.
std::pair<std::size_t, double> nearest_pole(const SecularFunction &f, Complex s)
{
  std::size_t best = 0;
  double dist = std::numeric_limits<double>::infinity();
  for (Eigen::Index k = 0; k < f.poles.size(); k++)
  {
    const double d = std::abs(s - I * f.poles(k));
    if (d < dist)
    {
      dist = d;
      best = static_cast<std::size_t>(k);
    }
  }
  return {best, dist};
}

void check_pole_distance(const SecularFunction &f, Complex s)
{
  const auto [k, d] = nearest_pole(f, s);
  if (f.size() > 0 && d <= 1e-14 * max_abs_pole(f))
  {
    std::ostringstream msg;
    msg << "secular function evaluated within " << d << " of pole " << k;
    throw PoleProximity(msg.str(), k);
  }
}

// Clusters of (numerically) coincident poles, with their summed weights.
struct Cluster
{
  double pole = 0.0;
  double weight = 0.0;
  std::size_t first = 0;
  std::size_t count = 0;
  bool active = false;
};

std::vector<Cluster> cluster_poles(const SecularFunction &f)
{
  const double tol = 1e-10 * std::max(1.0, max_abs_pole(f));
  const double tol_w = f.weight_tolerance();
  std::vector<Cluster> out;
  const auto n = f.size();
  std::size_t k = 0;
  while (k < n)
  {
    std::size_t e = k + 1;
    while (e < n && f.poles(static_cast<Eigen::Index>(e)) - f.poles(static_cast<Eigen::Index>(e - 1)) <= tol)
    {
      e++;
    }
    Cluster c;
    c.first = k;
    c.count = e - k;
    // Midpoint of the extreme members keeps mirrored clusters exactly mirrored.
    c.pole = 0.5 * (f.poles(static_cast<Eigen::Index>(k)) + f.poles(static_cast<Eigen::Index>(e - 1)));
    for (std::size_t m = k; m < e; m++)
    {
      c.weight += f.weights(static_cast<Eigen::Index>(m));
    }
    c.active = c.weight > tol_w;
    out.push_back(c);
    k = e;
  }
  return out;
}

Complex second_derivative(const SecularFunction &f, Complex s)
{
  Complex sum = 0.0;
  for (Eigen::Index k = 0; k < f.poles.size(); k++)
  {
    const Complex d = s - I * f.poles(k);
    sum += 2.0 * f.weights(k) / (d * d * d);
  }
  return sum;
}

struct NewtonOutcome
{
  Complex s;
  bool converged = false;
  int iterations = 0;
  double residual = 0.0;  // |F(s) - 1|
};

// Safeguarded Newton on F(s) - 1: steps clipped to half the distance to the nearest pole,
// halved along the Newton direction while the merit |F - 1| fails to decrease. Roots listed in
// `deflate` are divided out by factors (s - c) / (s - r), c the pole nearest to r, which tend
// to 1 at infinity, so the iteration can neither return to them nor escape outwards.
NewtonOutcome newton(const SecularFunction &f, Complex s, bool real_axis, const SolveOptions &opt,
                     const std::vector<Complex> &deflate = {})
{
  const double pole_guard = 1e-12 * std::max(1.0, max_abs_pole(f));
  auto h_of = [&](Complex t) {
    if (nearest_pole(f, t).second <= pole_guard)
    {
      return Complex(std::numeric_limits<double>::infinity(), 0.0);
    }
    return eval_F(f, t) - 1.0;
  };
  if (nearest_pole(f, s).second <= pole_guard)
  {
    s += real_axis ? Complex(pole_guard * 1e3, 0.0) : Complex(pole_guard * 1e3, pole_guard * 1e3);
  }
  std::vector<Complex> anchors;
  for (const Complex &r : deflate)
  {
    anchors.push_back(I * f.poles(static_cast<Eigen::Index>(nearest_pole(f, r).first)));
  }
  auto merit = [&](Complex t, Complex ht) {
    double m = std::abs(ht);
    for (std::size_t k = 0; k < deflate.size(); k++)
    {
      m *= std::abs(t - anchors[k]) / std::abs(t - deflate[k]);
    }
    return m;
  };
  auto newton_step = [&](Complex t, Complex ht) {
    Complex d = eval_F_derivative(f, t);
    for (std::size_t k = 0; k < deflate.size(); k++)
    {
      d += ht * (1.0 / (t - anchors[k]) - 1.0 / (t - deflate[k]));
    }
    Complex step = -ht / d;
    if (real_axis)
    {
      step = step.real();
    }
    return step;
  };
  NewtonOutcome out;
  Complex h = h_of(s);
  for (int it = 1; it <= opt.newton_max_iterations; it++)
  {
    out.iterations = it;
    if (std::abs(h) <= opt.newton_tolerance)
    {
      // One more step buys the remaining digits when it helps.
      const Complex step = newton_step(s, h);
      if (std::abs(step) < 0.5 * nearest_pole(f, s).second)
      {
        const Complex t = s + step;
        const Complex ht = h_of(t);
        if (std::abs(ht) <= std::abs(h))
        {
          s = t;
          h = ht;
        }
      }
      out.converged = true;
      break;
    }
    Complex step = newton_step(s, h);
    if (!std::isfinite(std::abs(step)))
    {
      break;
    }
    const double limit = 0.5 * nearest_pole(f, s).second;
    if (std::abs(step) > limit)
    {
      step *= limit / std::abs(step);
    }
    const double m = merit(s, h);
    Complex t = s + step;
    Complex ht = h_of(t);
    bool full_step = true;
    for (int halving = 0; halving < 30 && merit(t, ht) >= m; halving++)
    {
      full_step = false;
      step *= 0.5;
      t = s + step;
      ht = h_of(t);
    }
    if (merit(t, ht) >= m)
    {
      // No decrease along the Newton direction: the rounding floor of F has been reached.
      out.converged = std::abs(h) <= std::sqrt(opt.newton_tolerance);
      break;
    }
    s = t;
    h = ht;
    if (full_step && std::abs(step) <= 4.0 * eps * std::abs(s))
    {
      out.converged = std::abs(h) <= std::sqrt(opt.newton_tolerance);
      break;
    }
  }
  out.s = s;
  out.residual = std::abs(h);
  if (real_axis)
  {
    out.s = Complex(out.s.real(), 0.0);
  }
  return out;
}

struct Draft
{
  PerturbedRoot root;
  long mirror_of = -1;  // index of the root this one conjugates
  bool solved = false;  // found by Newton (not persisted, not a mirror)
  Complex start;
  bool real_axis = false;
  long gap = -1;  // interval between active poles gap, gap + 1
  long partner = -1;  // index of the mirror draft filled from this one
  long collapsed_from = -1;  // former mirror solved on the real axis for this source
  int iterations = 0;
  double newton_residual = 0.0;
};

std::vector<Draft> draft_roots(const SecularFunction &f, const SolveOptions &opt, std::vector<RootFailure> &failures)
{
  const auto clusters = cluster_poles(f);
  std::vector<Draft> drafts;

  // Persisted eigenvalues: every member of an inactive cluster, all but one of an active one.
  for (const auto &c : clusters)
  {
    const std::size_t keep = c.active ? c.count - 1 : c.count;
    for (std::size_t m = 0; m < keep; m++)
    {
      Draft d;
      const std::size_t pos = c.first + m;
      const double pole = c.active ? c.pole : f.poles(static_cast<Eigen::Index>(pos));
      d.root.secular_value = I * pole;
      d.root.tag = RootTag::persisted;
      d.root.interval_index = static_cast<long>(pos);
      drafts.push_back(d);
    }
  }

  const std::size_t persisted = drafts.size();

  SecularFunction eff;
  eff.symmetric = f.symmetric;
  std::vector<std::size_t> lower_pos;
  {
    std::vector<double> p, w;
    for (const auto &c : clusters)
    {
      if (c.active)
      {
        p.push_back(c.pole);
        w.push_back(c.weight);
        lower_pos.push_back(c.first + c.count - 1);
      }
    }
    eff.poles = Eigen::Map<Eigen::VectorXd>(p.data(), static_cast<Eigen::Index>(p.size()));
    eff.weights = Eigen::Map<Eigen::VectorXd>(w.data(), static_cast<Eigen::Index>(w.size()));
  }
  const long active = static_cast<long>(eff.size());
  if (active == 0)
  {
    return drafts;
  }

  auto record = [&](Draft d, Complex start, bool real_axis) {
    const NewtonOutcome nr = newton(eff, start, real_axis, opt);
    d.root.secular_value = nr.s;
    d.root.converged = nr.converged;
    d.iterations = nr.iterations;
    d.newton_residual = nr.residual;
    d.solved = true;
    d.start = start;
    d.real_axis = real_axis;
    drafts.push_back(d);
    return drafts.size() - 1;
  };

  {
    Draft d;
    d.root.tag = RootTag::real_root;
    d.root.interval_index = -1;
    record(d, Complex(eff.total_weight(), 0.0), f.symmetric);
  }

  const long intervals = active - 1;
  for (long k = 0; k < intervals; k++)
  {
    const long mirror = intervals - 1 - k;
    if (f.symmetric && k < mirror)
    {
      continue;  // filled in from the mirror below
    }
    const MuResult mu = find_mu(eff, static_cast<std::size_t>(k));
    const double dF = eval_F_derivative(eff, I * mu.value).real();
    const bool real_axis = f.symmetric && k == mirror;
    Complex s0 = I * mu.value + 1.0 / dF;
    if (real_axis)
    {
      s0 = Complex(1.0 / dF, 0.0);
    }
    Draft d;
    d.root.tag = RootTag::secular_newton;
    d.root.interval_index = static_cast<long>(lower_pos[static_cast<std::size_t>(k)]);
    d.gap = k;
    const auto at = record(d, s0, real_axis);
    if (f.symmetric && k != mirror)
    {
      Draft c;
      c.root = drafts[at].root;
      c.root.interval_index = static_cast<long>(lower_pos[static_cast<std::size_t>(mirror)]);
      c.mirror_of = static_cast<long>(at);
      c.gap = mirror;
      drafts.push_back(c);
      drafts[at].partner = static_cast<long>(drafts.size() - 1);
    }
  }

  auto others = [&](std::size_t skip) {
    std::vector<Complex> known;
    for (std::size_t k = 0; k < drafts.size(); k++)
    {
      if (k == skip || !drafts[k].solved)
      {
        continue;
      }
      const Complex r = drafts[k].root.secular_value;
      known.push_back(r);
      if (f.symmetric && r.imag() != 0.0)
      {
        known.push_back(std::conj(r));
      }
    }
    return known;
  };
  auto resolve = [&](std::size_t k) {
    const NewtonOutcome nr = newton(eff, drafts[k].start, drafts[k].real_axis, opt, others(k));
    const bool moved = nr.s != drafts[k].root.secular_value;
    drafts[k].root.secular_value = nr.s;
    drafts[k].root.converged = nr.converged;
    drafts[k].iterations = nr.iterations;
    drafts[k].newton_residual = nr.residual;
    return moved;
  };

  // Two starts that converged to one root: re-solve the one whose imaginary part lies outside
  // its own gap, with every other root deflated.
  auto in_gap = [&](const Draft &d) {
    if (d.gap < 0)
    {
      return false;
    }
    const double y = d.root.secular_value.imag();
    return eff.poles(d.gap) < y && y < eff.poles(d.gap + 1);
  };
  auto same = [](Complex a, Complex b) { return std::abs(a - b) <= 1e-7 * std::max(1.0, std::abs(a)); };
  auto clashing = [&](std::size_t a, std::size_t b) {
    const Complex va = drafts[a].root.secular_value;
    const Complex vb = drafts[b].root.secular_value;
    return same(va, vb) || (drafts[a].partner >= 0 && same(std::conj(va), vb)) ||
           (drafts[b].partner >= 0 && same(va, std::conj(vb))) ||
           (drafts[a].partner >= 0 && drafts[b].partner >= 0 && same(std::conj(va), std::conj(vb)));
  };
  auto dedupe = [&] {
    for (int pass = 0; pass < 4; pass++)
    {
      bool changed = false;
      for (std::size_t a = 0; a < drafts.size(); a++)
      {
        for (std::size_t b = a + 1; b < drafts.size(); b++)
        {
          if (!drafts[a].solved || !drafts[b].solved || !clashing(a, b))
          {
            continue;
          }
          std::size_t loser = in_gap(drafts[b]) && !in_gap(drafts[a]) ? a : b;
          if (drafts[loser].root.tag == RootTag::real_root)
          {
            loser = loser == a ? b : a;
          }
          changed = resolve(loser) || changed;
        }
      }
      if (!changed)
      {
        break;
      }
    }
  };
  dedupe();

  // A mirrored pair of gaps can hold two real roots instead of a conjugate pair; the mirror
  // is then solved on the real axis with the first root deflated.
  for (std::size_t a = 0; a < drafts.size(); a++)
  {
    auto &src = drafts[a];
    const Complex v = src.root.secular_value;
    if (src.partner < 0 || std::abs(v.imag()) > 1e-8 * std::max(1.0, std::abs(v)))
    {
      continue;
    }
    src.root.secular_value = Complex(v.real(), 0.0);
    const auto b = static_cast<std::size_t>(src.partner);
    src.partner = -1;
    drafts[b].mirror_of = -1;
    drafts[b].solved = true;
    drafts[b].real_axis = true;
    drafts[b].start = Complex(drafts[a].start.real(), 0.0);
    drafts[b].collapsed_from = static_cast<long>(a);
    resolve(b);
  }
  dedupe();

  // Undo a real-axis split that did not hold up: the source moved off the axis or the second
  // real root was not found.
  for (std::size_t b = 0; b < drafts.size(); b++)
  {
    const long a = drafts[b].collapsed_from;
    if (a < 0)
    {
      continue;
    }
    auto &src = drafts[static_cast<std::size_t>(a)];
    if (drafts[b].root.converged && src.root.secular_value.imag() == 0.0)
    {
      continue;
    }
    if (src.root.secular_value.imag() == 0.0)
    {
      // keep the failed real-axis draft; the trace step below may still recover it
      continue;
    }
    drafts[b].collapsed_from = -1;
    drafts[b].solved = false;
    drafts[b].real_axis = false;
    drafts[b].mirror_of = a;
    src.partner = static_cast<long>(b);
  }

  // Slots still holding a failed or repeated root are refilled together: deflated Newton from
  // a handful of starts, conjugate pairs taking two slots, and the trace sum_j (i lambda_j + w_j)
  // of the roots fixing the centre of the missing ones.
  auto refill = [&](const std::vector<std::size_t> &bad) {
    if (bad.empty())
    {
      return;
    }
    auto value_of = [&](std::size_t k) {
      const auto &d = drafts[k];
      return d.mirror_of >= 0 ? std::conj(drafts[static_cast<std::size_t>(d.mirror_of)].root.secular_value)
                              : d.root.secular_value;
    };
    std::vector<Complex> known;
    Complex rest = 0.0;
    for (std::size_t k = persisted; k < drafts.size(); k++)
    {
      if (std::find(bad.begin(), bad.end(), k) == bad.end())
      {
        known.push_back(value_of(k));
        rest += known.back();
      }
    }
    Complex trace = 0.0;
    for (Eigen::Index j = 0; j < eff.poles.size(); j++)
    {
      trace += I * eff.poles(j) + eff.weights(j);
    }
    const Complex centre = (trace - rest) / static_cast<double>(bad.size());
    std::vector<Complex> starts{centre};
    for (std::size_t k : bad)
    {
      const Complex st = drafts[k].solved ? drafts[k].start : std::conj(drafts[static_cast<std::size_t>(drafts[k].mirror_of)].start);
      starts.push_back(st);
      starts.push_back(std::conj(st));
      if (drafts[k].gap >= 0)
      {
        const double lo = eff.poles(drafts[k].gap);
        const double hi = eff.poles(drafts[k].gap + 1);
        for (double frac : {0.25, 0.5, 0.75})
        {
          starts.push_back(Complex(centre.real(), lo + frac * (hi - lo)));
        }
      }
    }
    for (double frac : {0.1, 0.5, 1.0})
    {
      starts.push_back(centre + Complex(0.0, frac * std::max(1e-3, std::abs(centre.imag()) + 1.0)));
    }
    for (std::size_t k : bad)
    {
      starts.push_back(value_of(k));
    }
    std::vector<std::pair<Complex, bool>> attempts;
    for (const Complex &st : starts)
    {
      attempts.emplace_back(st, false);
    }
    if (f.symmetric)
    {
      for (const Complex &st : starts)
      {
        attempts.emplace_back(Complex(st.real(), 0.0), true);
      }
    }
    std::vector<Complex> found;
    for (const auto &[st, on_axis] : attempts)
    {
      if (found.size() >= bad.size())
      {
        break;
      }
      std::vector<Complex> deflate;
      for (const Complex &r : known)
      {
        deflate.push_back(r);
      }
      for (const Complex &r : found)
      {
        deflate.push_back(r);
      }
      const NewtonOutcome nr = newton(eff, st, on_axis, opt, deflate);
      if (!nr.converged)
      {
        continue;
      }
      Complex r = nr.s;
      bool pair = false;
      if (f.symmetric)
      {
        if (std::abs(r.imag()) <= 1e-8 * std::max(1.0, std::abs(r)))
        {
          r = Complex(r.real(), 0.0);
        }
        else
        {
          pair = true;
        }
      }
      bool seen = false;
      for (const Complex &q : deflate)
      {
        seen = seen || same(q, r);
      }
      if (seen || found.size() + (pair ? 2 : 1) > bad.size())
      {
        continue;
      }
      found.push_back(r);
      if (pair)
      {
        found.push_back(std::conj(r));
      }
    }
    if (found.size() == bad.size())
    {
      for (std::size_t m = 0; m < bad.size(); m++)
      {
        auto &d = drafts[bad[m]];
        d.mirror_of = -1;
        d.partner = -1;
        d.collapsed_from = -1;
        d.solved = true;
        d.real_axis = found[m].imag() == 0.0;
        d.root.secular_value = found[m];
        d.root.converged = true;
      }
      for (auto &d : drafts)
      {
        if (d.partner >= 0 && std::find(bad.begin(), bad.end(), static_cast<std::size_t>(d.partner)) != bad.end())
        {
          d.partner = -1;
        }
      }
    }
  };
  {
    std::vector<std::size_t> bad;
    auto mark = [&](std::size_t k) {
      if (std::find(bad.begin(), bad.end(), k) == bad.end())
      {
        bad.push_back(k);
      }
    };
    for (std::size_t a = 0; a < drafts.size(); a++)
    {
      if (drafts[a].solved && !drafts[a].root.converged)
      {
        mark(a);
        if (drafts[a].partner >= 0)
        {
          mark(static_cast<std::size_t>(drafts[a].partner));
        }
      }
    }
    for (std::size_t a = 0; a < drafts.size(); a++)
    {
      for (std::size_t b = a + 1; b < drafts.size(); b++)
      {
        if (drafts[a].solved && drafts[b].solved && clashing(a, b) &&
            std::find(bad.begin(), bad.end(), a) == bad.end())
        {
          mark(b);
          if (drafts[b].partner >= 0)
          {
            mark(static_cast<std::size_t>(drafts[b].partner));
          }
        }
      }
    }
    refill(bad);
  }

  auto split_near_doubles = [&] {
    auto value_of = [&](std::size_t k) {
      const auto &d = drafts[k];
      return d.mirror_of >= 0 ? std::conj(drafts[static_cast<std::size_t>(d.mirror_of)].root.secular_value)
                              : d.root.secular_value;
    };
    for (std::size_t a = persisted; a < drafts.size(); a++)
    {
      for (std::size_t b = a + 1; b < drafts.size(); b++)
      {
        const Complex va = value_of(a);
        const Complex vb = value_of(b);
        const double sep = std::abs(va - vb);
        if (sep > 1e-4 * std::max(1.0, std::abs(va)))
        {
          continue;
        }
        const bool mirrored = drafts[a].mirror_of == static_cast<long>(b) || drafts[b].mirror_of == static_cast<long>(a);
        const bool independent = drafts[a].mirror_of < 0 && drafts[b].mirror_of < 0 && drafts[a].partner < 0 &&
                                 drafts[b].partner < 0;
        if (!mirrored && !independent)
        {
          continue;
        }
        const bool on_axis = f.symmetric && (mirrored || (va.imag() == 0.0 && vb.imag() == 0.0));
        Complex c = 0.5 * (va + vb);
        if (on_axis)
        {
          c = Complex(c.real(), 0.0);
        }
        bool ok = false;
        for (int it = 0; it < 60; it++)
        {
          if (nearest_pole(eff, c).second <= 1e-12 * std::max(1.0, max_abs_pole(eff)))
          {
            break;
          }
          Complex step = -eval_F_derivative(eff, c) / second_derivative(eff, c);
          if (on_axis)
          {
            step = step.real();
          }
          if (!std::isfinite(std::abs(step)) || std::abs(step) > 10.0 * sep + 1e-12)
          {
            break;
          }
          c += step;
          if (std::abs(step) <= 4.0 * eps * std::max(1.0, std::abs(c)))
          {
            ok = true;
            break;
          }
        }
        if (!ok)
        {
          continue;
        }
        const Complex h0 = eval_F(eff, c) - 1.0;
        const Complex f2 = second_derivative(eff, c);
        Complex r1;
        Complex r2;
        if (on_axis)
        {
          const double q = (-2.0 * h0 / f2).real();
          const double root = std::sqrt(std::abs(q));
          r1 = q >= 0.0 ? c + root : c + Complex(0.0, root);
          r2 = q >= 0.0 ? c - root : c - Complex(0.0, root);
        }
        else
        {
          const Complex root = std::sqrt(-2.0 * h0 / f2);
          r1 = c + root;
          r2 = c - root;
        }
        if (std::abs(r1 - r2) > 10.0 * sep + 1e-12)
        {
          continue;
        }
        if (std::abs(r1 - va) + std::abs(r2 - vb) > std::abs(r2 - va) + std::abs(r1 - vb))
        {
          std::swap(r1, r2);
        }
        if (mirrored)
        {
          const std::size_t src = drafts[a].mirror_of < 0 ? a : b;
          const std::size_t mir = src == a ? b : a;
          if (r1.imag() != 0.0 || r2.imag() != 0.0)
          {
            // conjugate pair: the source keeps the member on its own side
            const Complex pick = (src == a ? r1 : r2);
            drafts[src].root.secular_value = pick;
          }
          else
          {
            drafts[src].root.secular_value = src == a ? r1 : r2;
            drafts[mir].root.secular_value = src == a ? r2 : r1;
            drafts[mir].mirror_of = -1;
            drafts[mir].solved = true;
            drafts[mir].real_axis = true;
            drafts[mir].root.converged = true;
            drafts[src].partner = -1;
          }
          drafts[src].root.converged = true;
        }
        else
        {
          drafts[a].root.secular_value = r1;
          drafts[b].root.secular_value = r2;
          drafts[a].root.converged = drafts[b].root.converged = true;
        }
      }
    }
  };
  split_near_doubles();

  // Clusters of nearby roots. Newton stalls inside a multiple root at |F - 1| ~ tolerance, so
  // a k-fold root is only resolved to tolerance^(1/k), and a cluster can also hold more drafts
  // than roots. The argument principle on a circle around the cluster gives the true count;
  // a surplus is refilled elsewhere, and a stalled cluster is replaced by the roots of the
  // polynomial whose power sums are the contour moments of F' / (F - 1).
  auto value_of = [&](std::size_t k) {
    const auto &d = drafts[k];
    return d.mirror_of >= 0 ? std::conj(drafts[static_cast<std::size_t>(d.mirror_of)].root.secular_value)
                            : d.root.secular_value;
  };
  Complex trace = 0.0;
  for (Eigen::Index j = 0; j < eff.poles.size(); j++)
  {
    trace += I * eff.poles(j) + eff.weights(j);
  }
  const double scale =
      std::max(1.0, max_abs_pole(eff) + std::abs(trace) / std::max<double>(1.0, static_cast<double>(eff.size())));

  struct Circle
  {
    std::vector<std::size_t> members;
    Complex centre;
    double radius = 0.0;
    std::vector<Complex> sums;  // power sums of (z - centre) / radius over the enclosed roots
  };
  auto clusters_of_drafts = [&] {
    std::vector<Circle> out;
    std::vector<bool> grouped(drafts.size(), false);
    for (std::size_t a = persisted; a < drafts.size(); a++)
    {
      if (grouped[a])
      {
        continue;
      }
      Circle c;
      c.members.push_back(a);
      grouped[a] = true;
      for (std::size_t m = 0; m < c.members.size(); m++)
      {
        for (std::size_t b = persisted; b < drafts.size(); b++)
        {
          if (!grouped[b] && std::abs(value_of(b) - value_of(c.members[m])) <= 1e-2 * scale)
          {
            grouped[b] = true;
            c.members.push_back(b);
          }
        }
      }
      if (c.members.size() < 2)
      {
        continue;
      }
      for (std::size_t m : c.members)
      {
        c.centre += value_of(m);
      }
      c.centre /= static_cast<double>(c.members.size());
      double spread = 0.0;
      for (std::size_t m : c.members)
      {
        spread = std::max(spread, std::abs(value_of(m) - c.centre));
      }
      double room = nearest_pole(eff, c.centre).second;
      for (std::size_t b = persisted; b < drafts.size(); b++)
      {
        if (std::find(c.members.begin(), c.members.end(), b) == c.members.end())
        {
          room = std::min(room, std::abs(value_of(b) - c.centre));
        }
      }
      c.radius = std::min(0.5 * room, std::max(4.0 * spread, 1e-3 * scale));
      if (c.radius < 1.5 * spread)
      {
        continue;
      }
      const std::size_t order = c.members.size() + 2;
      c.sums.assign(order + 1, 0.0);
      const int points = 512;
      for (int q = 0; q < points; q++)
      {
        const Complex u = std::polar(1.0, 2.0 * M_PI * q / points);
        const Complex z = c.centre + c.radius * u;
        const Complex g = eval_F_derivative(eff, z) / (eval_F(eff, z) - 1.0) * c.radius * u;
        Complex up = 1.0;
        for (std::size_t p = 0; p <= order; p++)
        {
          c.sums[p] += g * up;
          up *= u;
        }
      }
      for (auto &x : c.sums)
      {
        x /= static_cast<double>(points);
      }
      out.push_back(c);
    }
    return out;
  };

  // Roots of the monic polynomial with the given power sums (Newton's identities).
  auto roots_from_sums = [](const std::vector<Complex> &sums, std::size_t k) {
    std::vector<Complex> e(k + 1, 0.0);
    e[0] = 1.0;
    for (std::size_t m = 1; m <= k; m++)
    {
      Complex acc = 0.0;
      for (std::size_t i = 1; i <= m; i++)
      {
        acc += (i % 2 == 1 ? 1.0 : -1.0) * e[m - i] * sums[i];
      }
      e[m] = acc / static_cast<double>(m);
    }
    Eigen::MatrixXcd companion = Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k));
    for (std::size_t m = 1; m <= k; m++)
    {
      companion(0, static_cast<Eigen::Index>(m - 1)) = (m % 2 == 1 ? 1.0 : -1.0) * e[m];
    }
    for (std::size_t m = 1; m < k; m++)
    {
      companion(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m - 1)) = 1.0;
    }
    const Eigen::VectorXcd ev = Eigen::ComplexEigenSolver<Eigen::MatrixXcd>(companion, false).eigenvalues();
    return std::vector<Complex>(ev.data(), ev.data() + ev.size());
  };

  {
    std::vector<std::size_t> bad;
    for (const auto &c : clusters_of_drafts())
    {
      const double count = std::round(c.sums[0].real());
      if (std::abs(c.sums[0].real() - count) > 0.1 || std::abs(c.sums[0].imag()) > 0.1 || count < 0.0)
      {
        continue;
      }
      long surplus = static_cast<long>(c.members.size()) - static_cast<long>(count);
      auto members = c.members;
      std::sort(members.begin(), members.end(), [&](std::size_t x, std::size_t y) {
        return std::abs(value_of(x).imag()) > std::abs(value_of(y).imag());
      });
      for (std::size_t m : members)
      {
        if (surplus <= 0)
        {
          break;
        }
        if (std::find(bad.begin(), bad.end(), m) != bad.end())
        {
          continue;
        }
        bad.push_back(m);
        surplus--;
        const long link = drafts[m].mirror_of >= 0 ? drafts[m].mirror_of : drafts[m].partner;
        if (link >= 0 && std::find(bad.begin(), bad.end(), static_cast<std::size_t>(link)) == bad.end())
        {
          bad.push_back(static_cast<std::size_t>(link));
          surplus--;
        }
      }
    }
    if (!bad.empty())
    {
      refill(bad);
      split_near_doubles();
    }
  }

  for (const auto &c : clusters_of_drafts())
  {
    const std::size_t k = c.members.size();
    if (k < 3 || std::abs(c.sums[0] - static_cast<double>(k)) > 0.1)
    {
      continue;
    }
    bool stalled = false;
    for (std::size_t m : c.members)
    {
      stalled = stalled || std::abs(eval_F(eff, value_of(m)) - 1.0) > 1e-12;
    }
    if (!stalled)
    {
      continue;
    }
    std::vector<Complex> fresh = roots_from_sums(c.sums, k);
    for (auto &u : fresh)
    {
      u = c.centre + c.radius * u;
    }
    if (f.symmetric)
    {
      // restore exact conjugate closure: pair each upper root with its nearest lower partner
      std::vector<Complex> closed;
      std::vector<bool> used(fresh.size(), false);
      std::sort(fresh.begin(), fresh.end(), [](Complex x, Complex y) { return std::abs(x.imag()) > std::abs(y.imag()); });
      for (std::size_t i = 0; i < fresh.size(); i++)
      {
        if (used[i])
        {
          continue;
        }
        used[i] = true;
        std::size_t best = fresh.size();
        for (std::size_t j = 0; j < fresh.size(); j++)
        {
          if (!used[j] && (best == fresh.size() || std::abs(fresh[j] - std::conj(fresh[i])) <
                                                       std::abs(fresh[best] - std::conj(fresh[i]))))
          {
            best = j;
          }
        }
        const bool real = best == fresh.size() ||
                          std::abs(fresh[i].imag()) <= std::abs(fresh[best] - std::conj(fresh[i]));
        if (real)
        {
          closed.push_back(Complex(fresh[i].real(), 0.0));
          continue;
        }
        used[best] = true;
        const Complex mid = 0.5 * (fresh[i] + std::conj(fresh[best]));
        closed.push_back(mid);
        closed.push_back(std::conj(mid));
      }
      fresh = closed;
    }
    if (fresh.size() != k)
    {
      continue;
    }
    Complex after = 0.0;
    for (const Complex &z : fresh)
    {
      after += z;
    }
    if (std::abs(after - c.centre * static_cast<double>(k) - c.radius * c.sums[1]) > 1e-6 * c.radius * k)
    {
      continue;
    }
    for (std::size_t m = 0; m < k; m++)
    {
      auto &d = drafts[c.members[m]];
      d.mirror_of = -1;
      d.partner = -1;
      d.collapsed_from = -1;
      d.solved = true;
      d.real_axis = fresh[m].imag() == 0.0;
      d.root.secular_value = fresh[m];
      d.root.converged = true;
    }
    for (auto &d : drafts)
    {
      if (d.partner >= 0 &&
          std::find(c.members.begin(), c.members.end(), static_cast<std::size_t>(d.partner)) != c.members.end())
      {
        d.partner = -1;
      }
    }
  }

  for (auto &d : drafts)
  {
    if (d.mirror_of >= 0)
    {
      const auto &src = drafts[static_cast<std::size_t>(d.mirror_of)].root;
      d.root.secular_value = std::conj(src.secular_value);
      d.root.converged = src.converged;
    }
    if (d.solved && !d.root.converged)
    {
      std::ostringstream msg;
      msg << "Newton did not converge after " << d.iterations << " iterations, |F-1| = " << d.newton_residual;
      failures.push_back({d.root.interval_index, msg.str()});
    }
  }

  // Persisted roots of a symmetric problem pair up too: conjugate the upper half.
  if (f.symmetric)
  {
    const std::size_t p = persisted;
    for (std::size_t a = 0; a < p / 2; a++)
    {
      const std::size_t b = p - 1 - a;
      if (drafts[b].root.secular_value == std::conj(drafts[a].root.secular_value))
      {
        drafts[a].mirror_of = static_cast<long>(b);
      }
    }
  }
  return drafts;
}

PerturbedSpectrum assemble(std::vector<Draft> drafts, std::vector<RootFailure> failures, std::size_t n)
{
  if (drafts.size() != n)
  {
    std::ostringstream msg;
    msg << "solve_perturbed: found " << drafts.size() << " roots for dimension " << n;
    throw StructuralError(msg.str());
  }
  PerturbedSpectrum out;
  out.failures = std::move(failures);
  for (auto &d : drafts)
  {
    out.roots.push_back(d.root);
  }
  std::stable_sort(out.roots.begin(), out.roots.end(), [](const PerturbedRoot &a, const PerturbedRoot &b) {
    if (a.value.imag() != b.value.imag())
    {
      return a.value.imag() < b.value.imag();
    }
    return a.value.real() < b.value.real();
  });
  return out;
}

}  // namespace

SecularFunction build_secular(const SkewSpectrum &spec)
{
  if (!spec.has_vectors())
  {
    throw InvalidInput("build_secular: spectrum has no eigenvectors");
  }
  SecularFunction f;
  f.poles = spec.values;
  f.weights.resize(spec.values.size());
  for (Eigen::Index j = 0; j < spec.vectors.cols(); j++)
  {
    f.weights(j) = std::norm(spec.vectors.col(j).sum());
  }
  f.symmetric = true;
  return f;
}

SecularFunction build_secular_rank_one(const HermitianSpectrum &G, const Eigen::VectorXd &direction, double strength)
{
  const Eigen::Index n = G.values.size();
  if (direction.size() != n || G.vectors.cols() != n)
  {
    throw InvalidInput("build_secular_rank_one: dimension mismatch");
  }
  SecularFunction f;
  f.poles.resize(n);
  f.weights.resize(n);
  const Eigen::VectorXcd b = direction.cast<Complex>();
  for (Eigen::Index j = 0; j < n; j++)
  {
    const Eigen::Index src = n - 1 - j;
    f.poles(j) = -G.values(src);
    f.weights(j) = strength * std::norm(G.vectors.col(src).dot(b));
  }
  f.symmetric = false;
  return f;
}

Complex eval_F_direct(const SecularFunction &f, Complex s)
{
  check_pole_distance(f, s);
  Complex sum = 0.0;
  for (Eigen::Index k = 0; k < f.poles.size(); k++)
  {
    sum += f.weights(k) / (s - I * f.poles(k));
  }
  return sum;
}

Complex eval_F_paired(const SecularFunction &f, Complex s)
{
  if (!f.symmetric)
  {
    throw InvalidInput("eval_F_paired: secular function is not symmetric");
  }
  check_pole_distance(f, s);
  const Eigen::Index n = f.poles.size();
  Complex sum = 0.0;
  for (Eigen::Index k = 0; k < n / 2; k++)
  {
    const Eigen::Index m = n - 1 - k;
    const double lam = f.poles(m);
    sum += s * (f.weights(k) + f.weights(m)) / (s * s + lam * lam);
  }
  if (n % 2 == 1)
  {
    sum += f.weights(n / 2) / (s - I * f.poles(n / 2));
  }
  return sum;
}

Complex eval_F(const SecularFunction &f, Complex s)
{
  if (f.symmetric && s.imag() == 0.0)
  {
    return eval_F_paired(f, s);
  }
  return eval_F_direct(f, s);
}

Complex eval_F_derivative(const SecularFunction &f, Complex s)
{
  check_pole_distance(f, s);
  Complex sum = 0.0;
  for (Eigen::Index k = 0; k < f.poles.size(); k++)
  {
    const Complex d = s - I * f.poles(k);
    sum -= f.weights(k) / (d * d);
  }
  return sum;
}

MuResult find_mu(const SecularFunction &f, std::size_t j)
{
  if (j + 1 >= f.size())
  {
    throw InvalidInput("find_mu: interval index out of range");
  }
  const auto a_idx = static_cast<Eigen::Index>(j);
  const double a = f.poles(a_idx);
  const double b = f.poles(a_idx + 1);
  MuResult out;
  const double tol_w = f.weight_tolerance();
  if (!(a < b) || f.weights(a_idx) <= tol_w || f.weights(a_idx + 1) <= tol_w)
  {
    out.skipped = true;
    return out;
  }
  auto g = [&](double t) {
    double sum = 0.0;
    for (Eigen::Index k = 0; k < f.poles.size(); k++)
    {
      sum += f.weights(k) / (t - f.poles(k));
    }
    return sum;
  };
  const double width = b - a;
  const double margin = std::max(1e-13 * width, 8.0 * eps * std::max({std::abs(a), std::abs(b), 1.0}));
  double lo = a + margin;
  double hi = b - margin;
  const double glo = g(lo);
  const double ghi = g(hi);
  if (!(glo > 0.0) || !(ghi < 0.0))
  {
    std::ostringstream msg;
    msg << "find_mu: no sign change on (" << a << ", " << b << "), g(lo) = " << glo << ", g(hi) = " << ghi
        << ", weights " << f.weights(a_idx) << ", " << f.weights(a_idx + 1);
    throw SecularAnomaly(msg.str());
  }
  const double target = 1e-12 * std::max(f.total_weight(), 1.0) / width;
  double mid = 0.5 * (lo + hi);
  double gm = g(mid);
  int it = 0;
  for (; it < 400; it++)
  {
    mid = 0.5 * (lo + hi);
    gm = g(mid);
    if (std::abs(gm) <= target || mid <= lo || mid >= hi)
    {
      break;
    }
    if (gm > 0.0)
    {
      lo = mid;
    }
    else
    {
      hi = mid;
    }
  }
  out.value = mid;
  out.g_residual = std::abs(gm);
  out.iterations = it + 1;
  return out;
}

std::vector<MuResult> secular_zeros(const SecularFunction &f)
{
  std::vector<MuResult> out;
  for (std::size_t j = 0; j + 1 < f.size(); j++)
  {
    out.push_back(find_mu(f, j));
  }
  return out;
}

const char *to_string(RootTag tag)
{
  switch (tag)
  {
  case RootTag::secular_newton:
    return "secular-newton";
  case RootTag::persisted:
    return "persisted";
  case RootTag::real_root:
    return "real-root";
  }
  return "unknown";
}

Complex PerturbedSpectrum::sum() const
{
  Complex s = 0.0;
  for (const auto &r : roots)
  {
    s += r.value;
  }
  return s;
}

std::vector<Complex> PerturbedSpectrum::values() const
{
  std::vector<Complex> out;
  for (const auto &r : roots)
  {
    out.push_back(r.value);
  }
  return out;
}

std::vector<Complex> PerturbedSpectrum::secular_values() const
{
  std::vector<Complex> out;
  for (const auto &r : roots)
  {
    out.push_back(r.secular_value);
  }
  return out;
}

PerturbedSpectrum solve_secular_roots(const SecularFunction &f, const SolveOptions &options)
{
  std::vector<RootFailure> failures;
  auto drafts = draft_roots(f, options, failures);
  for (auto &d : drafts)
  {
    d.root.value = d.root.secular_value;
  }
  return assemble(std::move(drafts), std::move(failures), f.size());
}

PerturbedSpectrum solve_perturbed(const SecularFunction &f, const ShiftInvertRefiner &refiner, const SolveOptions &options)
{
  if (static_cast<std::size_t>(refiner.matrix().rows()) != f.size())
  {
    throw InvalidInput("solve_perturbed: matrix and secular function differ in dimension");
  }
  if (!options.polish)
  {
    return solve_secular_roots(f, options);
  }
  std::vector<RootFailure> failures;
  auto drafts = draft_roots(f, options, failures);
  for (std::size_t k = 0; k < drafts.size(); k++)
  {
    auto &r = drafts[k].root;
    r.value = r.secular_value;
    if (drafts[k].mirror_of >= 0)
    {
      continue;
    }
    try
    {
      const auto p = refiner.refine(r.secular_value);
      r.value = p.value;
      r.residual = p.residual;
      if (f.symmetric && r.secular_value.imag() == 0.0)
      {
        r.value = Complex(r.value.real(), 0.0);
      }
    }
    catch (const NoConvergence &e)
    {
      r.residual = e.best_residual;
      failures.push_back({r.interval_index, e.what()});
    }
  }
  for (auto &d : drafts)
  {
    if (d.mirror_of >= 0)
    {
      const auto &src = drafts[static_cast<std::size_t>(d.mirror_of)].root;
      d.root.value = std::conj(src.value);
      d.root.residual = src.residual;
    }
  }
  return assemble(std::move(drafts), std::move(failures), f.size());
}

PerturbedSpectrum solve_perturbed(const SecularFunction &f, const Eigen::MatrixXcd &A, const SolveOptions &options)
{
  return solve_perturbed(f, ShiftInvertRefiner(A), options);
}

PerturbedSpectrum solve_perturbed(const SecularFunction &f, const SkewSpectrum &spec, const Eigen::MatrixXcd &A,
                                  const SolveOptions &options)
{
  if (spec.n != f.size())
  {
    throw InvalidInput("solve_perturbed: spectrum and secular function differ in dimension");
  }
  return solve_perturbed(f, A, options);
}

std::vector<double> bulk_separations(const SecularFunction &f, double alpha)
{
  std::vector<double> out;
  const auto n = static_cast<double>(f.size());
  for (std::size_t j = 0; j + 1 < f.size(); j++)
  {
    const double jd = static_cast<double>(j);
    if (jd < alpha * n || jd > (1.0 - alpha) * n)
    {
      continue;
    }
    const MuResult mu = find_mu(f, j);
    if (mu.skipped)
    {
      continue;
    }
    const auto k = static_cast<Eigen::Index>(j);
    out.push_back(std::min(mu.value - f.poles(k), f.poles(k + 1) - mu.value) * std::sqrt(n));
  }
  return out;
}

}  // namespace rmt
