// Localization verdict checks. Oracles: Gaussian coherent states whose
// windowed transform magnitudes follow closed-form decay laws, plane-wave
// bumps with exactly constant probe magnitudes, an escaping-frequency
// family whose spectral spike rides the dual lattice node-for-node, and
// exact-zero states. The fixtures pin the verdict contract: magnitudes
// under the floor or steep clean fits read outside, flat clean fits read
// inside, and anything between stays inconclusive.

#include <catch2/catch_amalgamated.hpp>
#include <cmath>

#include "mlk/states.hpp"
#include "mlk/wavefront.hpp"
#include "mlk/wfops.hpp"

using namespace mlk;

namespace {

HFamily coherent_family(const Grid& g, const std::vector<double>& hs,
                        double x0, double xi0) {
  return HFamily::generate(g, hs, [x0, xi0](const Grid& gr, double h) {
    return coherent_state(gr, h, x0, xi0);
  });
}

HFamily zero_family(const Grid& g, const std::vector<double>& hs) {
  return HFamily::generate(g, hs, [](const Grid& gr, double h) {
    return SampledFunction(
        gr, h, std::vector<cplx>(static_cast<std::size_t>(gr.size())));
  });
}

HFamily static_bump_family(const Grid& g, const std::vector<double>& hs) {
  return HFamily::generate(g, hs, [](const Grid& gr, double h) {
    std::vector<cplx> v(static_cast<std::size_t>(gr.size()));
    for (std::int64_t i = 0; i < gr.size(); ++i)
      v[static_cast<std::size_t>(i)] =
          cplx(bump_value(gr.node(i)[0], 0.0, 1.0), 0.0);
    return SampledFunction(gr, h, std::move(v));
  });
}

}  // namespace

TEST_CASE("finite-point verdicts for a coherent state") {
  // Sweep starts at k = 5 so the state's width sqrt(h) stays well under
  // the cutoff radius even when the stability check later halves it; at
  // coarser h the overlap transient bends the log-log line.
  Grid g = make_grid(-8.0, 8.0, 1 << 17);
  auto hs = SweepSpec{5, 11}.h_values();
  HFamily fam = coherent_family(g, hs, 0.0, 1.0);

  // At the concentration point the windowed magnitudes scale like h^{1/4}
  // (the transform peak of a width-sqrt(h) Gaussian), well under the flat
  // threshold.
  WfPointResult in = wf_finite_test(fam, 0.0, 1.0);
  CHECK(in.verdict == WfVerdict::inside);
  CHECK(in.regression.slope > 0.1);
  CHECK(in.regression.slope < 0.4);
  CHECK(in.regression.r_squared > 0.9);
  CHECK_FALSE(in.regression.floor_hit);

  // Mirrored frequency: the spectrum sits two units away and the probe
  // magnitudes drop under the floor within a few octaves.
  WfPointResult flip = wf_finite_test(fam, 0.0, -1.0);
  CHECK(flip.verdict == WfVerdict::outside);
  CHECK(flip.regression.floor_hit);

  // Far spatial point: the cutoff sees only the Gaussian tail.
  WfPointResult off = wf_finite_test(fam, 2.5, 1.0);
  CHECK(off.verdict == WfVerdict::outside);
  CHECK(off.regression.floor_hit);

  // Verdicts survive halving the cutoff radius. The outside point is
  // insensitive on the main sweep; the center needs a deeper one, since
  // halving the radius to 0.25 leaves a visible overlap transient until
  // sqrt(h) is well below it.
  CHECK(wf_verdict_stable(fam, {2.5, 0.0}, {1.0, 0.0}));
  Grid gd = make_grid(-2.0, 2.0, 1 << 17);
  HFamily deep = coherent_family(gd, SweepSpec{7, 13}.h_values(), 0.0, 1.0);
  CHECK(wf_verdict_stable(deep, {0.0, 0.0}, {1.0, 0.0}));
}

TEST_CASE("zero family reads outside everywhere") {
  Grid g = make_grid(-4.0, 4.0, 1 << 14);
  auto hs = SweepSpec{4, 8}.h_values();
  HFamily z = zero_family(g, hs);

  const double probes[3][2] = {{0.0, 1.0}, {-1.0, -2.0}, {2.0, 0.5}};
  for (const auto& p : probes) {
    WfPointResult res = wf_finite_test(z, p[0], p[1]);
    INFO("probe (" << p[0] << ", " << p[1] << ")");
    CHECK(res.verdict == WfVerdict::outside);
    CHECK(res.regression.floor_hit);
    CHECK(res.regression.floor_dominated());
    CHECK(std::isinf(res.regression.slope));
  }
  CHECK(wf_infinite_test(z, 0.0, +1).verdict == WfVerdict::outside);
  CHECK(wf_infinite_test(z, 0.0, -1).verdict == WfVerdict::outside);
}

TEST_CASE("plane-wave bump verdicts") {
  Grid g = make_grid(-8.0, 8.0, 1 << 16);
  auto hs = SweepSpec{4, 10}.h_values();
  HFamily fam = HFamily::generate(g, hs, [](const Grid& gr, double h) {
    return planewave_bump_state(gr, h, 2.0);
  });

  // The center probe magnitude is the integral of the (positive) cutoff
  // pair, identical for every h: a perfectly flat line.
  WfPointResult in = wf_finite_test(fam, 0.0, 2.0);
  CHECK(in.verdict == WfVerdict::inside);
  CHECK(std::abs(in.regression.slope) < 0.1);
  CHECK(in.regression.r_squared > 0.99);

  WfPointResult flip = wf_finite_test(fam, 0.0, -2.0);
  CHECK(flip.verdict == WfVerdict::outside);
  CHECK(flip.regression.floor_hit);

  // Outside the bump's support the cutoff product vanishes identically.
  WfPointResult off = wf_finite_test(fam, 2.5, 2.0);
  CHECK(off.verdict == WfVerdict::outside);
  CHECK(off.regression.floor_dominated());

  CHECK(wf_verdict_stable(fam, {0.0, 0.0}, {2.0, 0.0}));
}

TEST_CASE("frequency-ray verdicts separate escaping and uniformly smooth") {
  // The phase pi*x/(2h^2) puts the spectral spike at pi/(2h), which for
  // h = 2^-k on this box lands exactly on a dual lattice node, so the
  // upward ray sees the full spike magnitude at every sweep member.
  Grid g = make_grid(-2.0, 2.0, 1 << 18);
  auto hs = SweepSpec{4, 8}.h_values();
  HFamily esc = HFamily::generate(g, hs, [](const Grid& gr, double h) {
    std::vector<cplx> v(static_cast<std::size_t>(gr.size()));
    const double w = pi / (2.0 * h * h);
    for (std::int64_t i = 0; i < gr.size(); ++i) {
      double x = gr.node(i)[0];
      double b = bump_value(x, 0.0, 1.0);
      v[static_cast<std::size_t>(i)] =
          b * cplx(std::cos(w * x), std::sin(w * x));
    }
    return SampledFunction(gr, h, std::move(v));
  });

  // Upward: the <xi>^6-weighted spike magnitude grows like h^{-6}; the
  // fitted slope is -6 and the family is pinned inside along +1.
  WfPointResult up = wf_infinite_test(esc, 0.0, +1);
  CHECK(up.verdict == WfVerdict::inside);
  CHECK(up.regression.slope < -5.5);
  CHECK(up.regression.slope > -6.5);
  CHECK(up.regression.r_squared > 0.999);

  // Downward: nothing but transform roundoff, which the floor excludes.
  WfPointResult down = wf_infinite_test(esc, 0.0, -1);
  CHECK(down.verdict == WfVerdict::outside);
  CHECK(down.regression.floor_hit);

  // Any fixed finite frequency is left behind by the escaping spike.
  WfPointResult fin = wf_finite_test(esc, 0.0, 2.0);
  CHECK(fin.verdict == WfVerdict::outside);
  CHECK(fin.regression.floor_hit);

  // Contrast family: the same bump without oscillation is h-uniformly
  // smooth. Its ray magnitudes come from the cutoff's own spectral tail
  // e^{-c sqrt(xi/h)}, which needs the deeper sweep to fall under the
  // floor; both rays then die while the zero-frequency probe stays flat.
  Grid gs = make_grid(-2.0, 2.0, 1 << 13);
  auto hs2 = SweepSpec{6, 12}.h_values();
  HFamily smooth = static_bump_family(gs, hs2);
  WfPointResult ray_up = wf_infinite_test(smooth, 0.0, +1);
  CHECK(ray_up.verdict == WfVerdict::outside);
  CHECK(ray_up.regression.floor_hit);
  CHECK(wf_infinite_test(smooth, 0.0, -1).verdict == WfVerdict::outside);
  WfPointResult flat = wf_finite_test(smooth, 0.0, 0.0);
  CHECK(flat.verdict == WfVerdict::inside);

  // A grid too coarse to open the frequency ray is an error, as is a
  // zero direction.
  Grid coarse = make_grid(-4.0, 4.0, 8);
  HFamily cz = zero_family(coarse, {0.25, 0.125});
  CHECK_THROWS_AS(wf_infinite_test(cz, 0.0, +1), invalid_argument_error);
  CHECK_THROWS_AS(wf_infinite_test(cz, {0.0, 0.0}, {0.0, 0.0}),
                  invalid_argument_error);
}

TEST_CASE("operator-route verdicts never contradict direct probes") {
  Grid g = make_grid(-8.0, 8.0, 1 << 16);
  auto hs = SweepSpec{4, 10}.h_values();
  HFamily fam = coherent_family(g, hs, 0.0, 1.0);

  const double probes[4][2] = {
      {0.0, 1.0}, {0.0, -1.0}, {2.5, 1.0}, {-1.5, -0.5}};
  for (const auto& p : probes) {
    WfPointResult direct = wf_finite_test(fam, p[0], p[1]);
    WfPointResult op = wf_psdo_test(fam, p[0], p[1]);
    INFO("probe (" << p[0] << ", " << p[1] << "): direct "
                   << to_string(direct.verdict) << ", operator "
                   << to_string(op.verdict));
    CHECK_FALSE((direct.verdict == WfVerdict::inside &&
                 op.verdict == WfVerdict::outside));
    CHECK_FALSE((direct.verdict == WfVerdict::outside &&
                 op.verdict == WfVerdict::inside));
  }

  // The operator route is decisive where the state clearly is not.
  CHECK(wf_psdo_test(fam, 0.0, -1.0).verdict == WfVerdict::outside);
  CHECK(wf_psdo_test(fam, 2.5, 1.0).verdict == WfVerdict::outside);
  // And it never expels the concentration point.
  CHECK(wf_psdo_test(fam, 0.0, 1.0).verdict != WfVerdict::outside);
}

TEST_CASE("phase-space scan isolates a coherent state's cell") {
  // Probe spacings of 2 in x and 4 in xi keep every off-cell suppression
  // mechanism (Gaussian spatial tails, cutoff spectral tails) either
  // under the floor or on a steep convex trend, so the single occupied
  // cell is flanked by outside verdicts with slope >= 6 everywhere.
  Grid g = make_grid(-12.0, 12.0, 1 << 19);
  auto hs = SweepSpec{4, 9}.h_values();
  HFamily fam = coherent_family(g, hs, 0.0, 1.0);

  WfScanResult scan = wf_scan(fam, -10.0, 10.0, 11, -19.0, 21.0, 11);
  REQUIRE(scan.x.size() == 11);
  REQUIRE(scan.xi.size() == 11);
  CHECK(scan.x[5] == 0.0);
  CHECK(scan.xi[5] == 1.0);

  for (std::size_t ix = 0; ix < 11; ++ix) {
    for (std::size_t ixi = 0; ixi < 11; ++ixi) {
      std::size_t p = ix * 11 + ixi;
      INFO("cell (" << scan.x[ix] << ", " << scan.xi[ixi] << ") slope "
                    << scan.slopes[p] << " r2 " << scan.r_squared[p]);
      if (ix == 5 && ixi == 5) {
        CHECK(scan.verdicts[p] == WfVerdict::inside);
        CHECK(scan.slopes[p] > 0.0);
        CHECK(scan.slopes[p] < 1.0);
        CHECK(scan.r_squared[p] > 0.9);
      } else {
        CHECK(scan.verdicts[p] == WfVerdict::outside);
        CHECK(scan.slopes[p] >= 6.0);
      }
    }
  }
  CHECK(&scan.at(5, 5) == &scan.verdicts[5 * 11 + 5]);
}

TEST_CASE("scan inside set hugs a quadratic phase front") {
  // bump(x) e^{i x^2 / (2h)} concentrates on the line xi = x over the
  // bump's support: the scan's inside cells stay within one probe cell
  // of that segment.
  Grid g = make_grid(-8.0, 8.0, 1 << 16);
  auto hs = SweepSpec{4, 10}.h_values();
  HFamily fam = HFamily::generate(g, hs, [](const Grid& gr, double h) {
    std::vector<cplx> v(static_cast<std::size_t>(gr.size()));
    for (std::int64_t i = 0; i < gr.size(); ++i) {
      double x = gr.node(i)[0];
      double b = bump_value(x, 0.0, 1.0);
      double ang = x * x / (2.0 * h);
      v[static_cast<std::size_t>(i)] =
          b * cplx(std::cos(ang), std::sin(ang));
    }
    return SampledFunction(gr, h, std::move(v));
  });

  WfScanResult scan = wf_scan(fam, -2.5, 2.5, 11, -2.5, 2.5, 11);
  int inside_count = 0;
  for (std::size_t ix = 0; ix < 11; ++ix) {
    for (std::size_t ixi = 0; ixi < 11; ++ixi) {
      if (scan.at(ix, ixi) != WfVerdict::inside) continue;
      ++inside_count;
      INFO("inside cell (" << scan.x[ix] << ", " << scan.xi[ixi] << ")");
      CHECK(std::abs(scan.xi[ixi] - scan.x[ix]) <= 0.76);
      CHECK(std::abs(scan.x[ix]) <= 1.26);
    }
  }
  // The diagonal cells over the bump's core are occupied.
  CHECK(scan.at(4, 4) == WfVerdict::inside);
  CHECK(scan.at(5, 5) == WfVerdict::inside);
  CHECK(scan.at(6, 6) == WfVerdict::inside);
  CHECK(inside_count >= 3);
}

TEST_CASE("pairing magnitude separates frequency-mirrored families") {
  Grid g = make_grid(-8.0, 8.0, 1 << 16);
  auto hs = SweepSpec{4, 10}.h_values();
  HFamily u = coherent_family(g, hs, 0.0, 1.0);
  HFamily w = coherent_family(g, hs, 0.0, -1.0);

  // The unconjugated self-pairing of a frequency-1 state oscillates at
  // 2/h and collapses like e^{-1/h}: under the floor after one octave.
  SweepRegression self = pairing_decay(u, u);
  CHECK(self.floor_hit);
  CHECK(self.floor_dominated());
  CHECK(self.slope >= 6.0);

  // Pairing against the mirrored state cancels the oscillation exactly:
  // the integral is the full Gaussian mass, flat at 1.
  SweepRegression mirror = pairing_decay(u, w);
  CHECK_FALSE(mirror.floor_hit);
  CHECK(std::abs(mirror.slope) < 0.1);
  CHECK(mirror.r_squared > 0.99);
  CHECK(std::abs(mirror.magnitudes.front() - 1.0) < 0.01);

  Grid g2 = make_grid(-4.0, 4.0, 1 << 15);
  HFamily v = coherent_family(g2, hs, 0.0, 1.0);
  CHECK_THROWS_AS(pairing_decay(u, v), invalid_argument_error);
}

TEST_CASE("temperedness separates power growth from essential growth") {
  Grid g = make_grid(-4.0, 4.0, 1 << 14);
  auto hs = SweepSpec{4, 9}.h_values();

  // Normalized states have bounded localized norms at every order.
  HFamily coh = coherent_family(g, hs, 0.0, 1.0);
  TemperednessReport a = temperedness_check(coh, {0.0, 0.0}, 0.5, {0.0, 1.0});
  CHECK(a.tempered);
  REQUIRE(a.growth.size() == 2);
  CHECK(std::abs(a.growth[0]) < 0.1);
  CHECK(std::abs(a.growth[1]) < 0.1);

  // A pure power h^{-3} is recovered to within the fit's resolution.
  HFamily pw = HFamily::generate(g, hs, [](const Grid& gr, double h) {
    std::vector<cplx> v(static_cast<std::size_t>(gr.size()));
    double amp = std::pow(h, -3.0);
    for (std::int64_t i = 0; i < gr.size(); ++i)
      v[static_cast<std::size_t>(i)] =
          cplx(amp * bump_value(gr.node(i)[0], 0.0, 1.0), 0.0);
    return SampledFunction(gr, h, std::move(v));
  });
  TemperednessReport b = temperedness_check(pw, {0.0, 0.0}, 0.5, {0.0});
  CHECK(b.tempered);
  CHECK(std::abs(b.growth[0] - 3.0) < 0.05);
  CHECK(b.fits[0].r_squared > 0.999);

  // e^{1/(2h)} growth is faster than any power: the log-log data is
  // convex, no line fits, and the family is flagged.
  HFamily ess = HFamily::generate(g, hs, [](const Grid& gr, double h) {
    std::vector<cplx> v(static_cast<std::size_t>(gr.size()));
    double amp = std::exp(0.5 / h);
    for (std::int64_t i = 0; i < gr.size(); ++i)
      v[static_cast<std::size_t>(i)] =
          cplx(amp * bump_value(gr.node(i)[0], 0.0, 1.0), 0.0);
    return SampledFunction(gr, h, std::move(v));
  });
  TemperednessReport c = temperedness_check(ess, {0.0, 0.0}, 0.5, {0.0});
  CHECK_FALSE(c.tempered);
  CHECK(c.fits[0].r_squared < 0.9);
  CHECK(c.fits[0].slope < 0.0);

  CHECK_THROWS_AS(temperedness_check(coh, {0.0, 0.0}, 0.5, {}),
                  invalid_argument_error);
  HFamily tiny = coherent_family(g, SweepSpec{4, 6}.h_values(), 0.0, 1.0);
  CHECK_THROWS_AS(temperedness_check(tiny, {0.0, 0.0}, 0.5, {0.0}),
                  invalid_argument_error);
}

TEST_CASE("symbol-support probes classify operator concentration") {
  HSymbol a(1, mul(bump(variable("x"), 0.0, 1.0),
                   bump(variable("xi"), 0.0, 1.0)));
  auto hs = SweepSpec{4, 10}.h_values();

  // Outside the support every derivative vanishes identically.
  WfPointResult far = op_wavefront(a, {2.0, 0.0}, {2.0, 0.0}, hs);
  CHECK(far.verdict == WfVerdict::outside);
  CHECK(far.regression.floor_dominated());

  WfPointResult edge = op_wavefront(a, {0.0, 0.0}, {1.6, 0.0}, hs);
  CHECK(edge.verdict == WfVerdict::outside);

  // At the center the shrinking-ball derivative maxima stay put.
  WfPointResult center = op_wavefront(a, {0.0, 0.0}, {0.0, 0.0}, hs);
  CHECK(center.verdict != WfVerdict::outside);
}

TEST_CASE("tensor products keep factor localization") {
  Grid g1 = make_grid(-3.0, 3.0, 2048);
  auto hs = SweepSpec{4, 7}.h_values();
  HFamily u = coherent_family(g1, hs, 0.0, 1.0);

  std::vector<SampledFunction> prod;
  for (std::size_t m = 0; m < hs.size(); ++m)
    prod.push_back(tensor(u.member(m), u.member(m)));
  Grid g2 = prod.front().grid;
  HFamily t(g2, hs, std::move(prod));

  // The outer product of two coherent factors is the closed-form 2D
  // coherent state, sample for sample.
  SampledFunction direct = coherent_state2(g2, hs[0], 0.0, 0.0, 1.0, 1.0);
  double diff = 0.0;
  for (std::size_t i = 0; i < direct.values.size(); ++i)
    diff = std::max(diff,
                    std::abs(t.member(0).values[i] - direct.values[i]));
  CHECK(diff < 1e-12);

  // Verdict battery over factor probes: the product is inside only where
  // both factors are. The wider cutoff keeps the short coarse sweep free
  // of overlap transients at the concentration points.
  WfOptions wide;
  wide.space_radius = 1.0;
  const double pts[3][2] = {{0.0, 1.0}, {2.0, 1.0}, {0.0, -1.0}};
  WfVerdict fv[3];
  for (int i = 0; i < 3; ++i)
    fv[i] = wf_finite_test(u, pts[i][0], pts[i][1], wide).verdict;
  CHECK(fv[0] == WfVerdict::inside);
  CHECK(fv[1] == WfVerdict::outside);
  CHECK(fv[2] != WfVerdict::inside);

  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      WfPointResult tv = wf_finite_test(t, {pts[i][0], pts[j][0]},
                                        {pts[i][1], pts[j][1]}, wide);
      INFO("product probe x (" << pts[i][0] << ", " << pts[j][0]
                               << ") xi (" << pts[i][1] << ", "
                               << pts[j][1] << ")");
      if (tv.verdict == WfVerdict::inside) {
        CHECK(fv[i] == WfVerdict::inside);
        CHECK(fv[j] == WfVerdict::inside);
      }
      if (i == 0 && j == 0) CHECK(tv.verdict == WfVerdict::inside);
      if (i == 1 || j == 1) CHECK(tv.verdict == WfVerdict::outside);
    }
  }
}

TEST_CASE("wavefront probes validate their inputs") {
  Grid g = make_grid(-4.0, 4.0, 256);
  std::vector<double> hs = {0.25, 0.125, 0.0625, 0.03125};
  HFamily z = zero_family(g, hs);

  WfOptions bad;
  bad.stencil = 4;
  CHECK_THROWS_AS(wf_finite_test(z, 0.0, 0.0, bad), invalid_argument_error);
  bad.stencil = 1;
  CHECK_THROWS_AS(wf_finite_test(z, 0.0, 0.0, bad), invalid_argument_error);

  CHECK_THROWS_AS(wf_scan(z, 0.0, 1.0, 1, 0.0, 1.0, 5),
                  invalid_argument_error);

  Grid g2 = make_grid(-4.0, 4.0, 16, -4.0, 4.0, 16);
  HFamily z2 = zero_family(g2, hs);
  CHECK_THROWS_AS(wf_scan(z2, 0.0, 1.0, 5, 0.0, 1.0, 5),
                  invalid_argument_error);

  // Probing frequencies beyond the grid's resolution trips the guard.
  CHECK_THROWS_AS(wf_finite_test(z, 0.0, 50.0), resolution_error);
}
