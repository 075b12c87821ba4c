use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sho_rake::closed_form_stats::{BestSumCdf, BranchProfile, GscSpec, GscSum, JointPdf, TopSumCdf};
use sho_rake::Error;
use sho_rake::monte_carlo::{empirical_cdf, empirical_density_2d, sample_block_sums, sample_slot, sample_top_sum, Bins2d};
use sho_rake::outage::{OutageModel, ShoConfig};
use sho_rake::pdp::{apply_distinctness_jitter, exponential_mip, DEFAULT_JITTER};
use sho_rake::quadrature::{integrate_1d, QuadratureSettings};

fn tight() -> QuadratureSettings {
    QuadratureSettings { rel_tol: 1e-11, abs_tol: 1e-14, max_depth: 30 }
}

#[test]
fn joint_density_marginalizes_to_upper_block_density() {
    for &(n, n_c, n_s, delta) in &[(5, 3, 1, 1.0), (5, 4, 2, 0.5), (4, 3, 2, 0.5), (5, 3, 2, 0.5), (6, 5, 2, 0.3)] {
        let prof = exponential_mip(1.0, delta, n);
        let joint = JointPdf::new(&prof, n_c, n_s).unwrap();
        let p = n_c - n_s;
        let upper = GscSum::new(&prof, GscSpec::new(n, p).unwrap()).unwrap();
        for &x in &[0.3, 1.1, 2.5, 4.0] {
            let top = n_s as f64 * x / p as f64;
            let breaks: Vec<f64> = (1..n_s).map(|l| l as f64 * x / p as f64).collect();
            let marginal = integrate_1d(|y| joint.density(x, y), 0.0, top, &breaks, &tight()).unwrap().value;
            let want = upper.pdf(x);
            assert!((marginal - want).abs() < 1e-8 * want.max(1e-3), "{n},{n_c},{n_s} x={x}: {marginal} vs {want}");
        }
    }
}

#[test]
fn gsc_pdf_matches_histogram() {
    let prof = BranchProfile::new(vec![2.0, 1.3, 0.8, 0.4], 1).unwrap();
    let g = GscSum::new(&prof, GscSpec::new(4, 3).unwrap()).unwrap();
    let n = 10_000_000;
    let (lo, hi) = (2.45, 2.55);
    let s = sample_top_sum(&prof, 3, n, 11).unwrap();
    let hits = s.iter().filter(|&&v| v >= lo && v < hi).count() as f64;
    let p = hits / n as f64;
    let se = (p * (1.0 - p) / n as f64).sqrt() / (hi - lo);
    let avg = (g.cdf(hi) - g.cdf(lo)) / (hi - lo);
    assert!((avg - p / (hi - lo)).abs() <= 3.0 * se, "{avg} vs {}", p / (hi - lo));
    assert!((g.pdf(2.5) - avg).abs() < 1e-3 * avg);
}

#[test]
fn cdfs_match_simulation_at_reference_points() {
    let prof = exponential_mip(1.0, 0.5, 5);
    let g = GscSum::new(&prof, GscSpec::new(5, 3).unwrap()).unwrap();
    let c = empirical_cdf(&sample_top_sum(&prof, 3, 10_000_000, 12).unwrap(), &[2.0]);
    assert!((g.cdf(2.0) - c.values[0]).abs() <= 3.0 * c.std_errors[0]);

    let prof = exponential_mip(1.0, 1.0, 5);
    let b = BestSumCdf::new(&prof, GscSpec::new(5, 2).unwrap()).unwrap();
    let c = empirical_cdf(&sample_top_sum(&prof, 2, 10_000_000, 13).unwrap(), &[1.2]);
    assert!((b.cdf(1.2) - c.values[0]).abs() <= 3.0 * c.std_errors[0]);
}

#[test]
fn joint_density_matches_histogram_bin() {
    let prof = exponential_mip(1.0, 0.5, 5);
    let joint = JointPdf::new(&prof, 4, 2).unwrap();
    let samples = sample_block_sums(&prof, 2, 2, 20_000_000, 14).unwrap();
    let h = 0.1;
    let bins = Bins2d { x_edges: vec![3.0 - h / 2.0, 3.0 + h / 2.0], y_edges: vec![1.0 - h / 2.0, 1.0 + h / 2.0] };
    let b = empirical_density_2d(&samples, &bins)[0];
    let avg = joint.rect_probability((bins.x_edges[0], bins.x_edges[1]), (bins.y_edges[0], bins.y_edges[1]), &tight()).unwrap()
        / (h * h);
    assert!(b.hits > 1000);
    assert!((avg - b.density).abs() <= 3.0 * b.std_error, "{avg} vs {}", b.density);
}

#[test]
fn jittered_equal_means_track_the_confluent_limit() {
    // blocks of at most two coincident means: jittered partial fractions work
    for &(n, m) in &[(4, 3), (5, 3), (6, 3)] {
        let raw = exponential_mip(1.0, 0.0, n);
        let exact = BestSumCdf::new(&raw, GscSpec::new(n, m).unwrap()).unwrap();
        let jit = GscSum::new(&apply_distinctness_jitter(&raw, DEFAULT_JITTER), GscSpec::new(n, m).unwrap()).unwrap();
        for i in 1..40 {
            let x = 0.25 * i as f64;
            assert!((exact.cdf(x) - jit.cdf(x)).abs() < 1e-5, "n={n} m={m} x={x}");
        }
    }
    // three or more: the partial fractions refuse, the automatic route does not
    for &(n, m) in &[(5, 4), (6, 4), (6, 5)] {
        let raw = exponential_mip(1.0, 0.0, n);
        let jittered = apply_distinctness_jitter(&raw, DEFAULT_JITTER);
        assert!(matches!(GscSum::new(&jittered, GscSpec::new(n, m).unwrap()), Err(Error::Singularity { .. })));
        let exact = BestSumCdf::new(&raw, GscSpec::new(n, m).unwrap()).unwrap();
        let auto = TopSumCdf::new(&jittered, m).unwrap();
        assert!(matches!(auto, TopSumCdf::DividedDifference(_)));
        for i in 1..40 {
            let x = 0.25 * i as f64;
            assert!((exact.cdf(x) - auto.cdf(x)).abs() < 1e-7, "n={n} m={m} x={x}");
        }
    }
}

#[test]
fn joint_density_refuses_ill_conditioned_blocks() {
    let jittered = apply_distinctness_jitter(&exponential_mip(1.0, 0.0, 6), DEFAULT_JITTER);
    // upper block of four: partial fractions over three coincident means
    assert!(matches!(JointPdf::new(&jittered, 6, 2), Err(Error::Singularity { .. })));
    // a single lower path needs no partial fractions; four-station shapes stay available
    assert!(JointPdf::new(&jittered, 5, 1).is_ok());
    assert!(JointPdf::new(&jittered, 3, 2).is_ok());
}

#[test]
fn slot_sampler_moments_and_independence() {
    let cfg = ShoConfig { l: 3, n_paths: vec![4; 3], n_c: 3, n_s: 1, gamma_t: 1.0 };
    let profiles: Vec<BranchProfile> =
        (1..=3).map(|bs| BranchProfile::new(exponential_mip(2.0, 0.5, 4).gammas, bs).unwrap()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    let n = 400_000;
    let mut sums = vec![vec![0.0; 4]; 3];
    let (mut sa, mut sb, mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0, 0.0, 0.0);
    let mut first = Vec::with_capacity(n);
    let mut second = Vec::with_capacity(n);
    for _ in 0..n {
        let d = sample_slot(&profiles, &cfg, &mut rng);
        for (bs, paths) in d.paths.iter().enumerate() {
            for (k, v) in paths.iter().enumerate() {
                sums[bs][k] += v;
            }
        }
        let (a, b) = (d.paths[0][0], d.paths[1][0]);
        sa += a;
        sb += b;
        sab += a * b;
        saa += a * a;
        sbb += b * b;
        first.push(d.paths[1].iter().sum::<f64>());
        second.push(d.paths[2].iter().sum::<f64>());
    }
    let nf = n as f64;
    for (bs, p) in profiles.iter().enumerate() {
        for (k, g) in p.gammas.iter().enumerate() {
            let mean = sums[bs][k] / nf;
            assert!((mean - g).abs() < 0.01 * g, "bs {bs} path {k}: {mean} vs {g}");
        }
    }
    let cov = sab / nf - (sa / nf) * (sb / nf);
    let corr = cov / ((saa / nf - (sa / nf).powi(2)) * (sbb / nf - (sb / nf).powi(2))).sqrt();
    assert!(corr.abs() < 0.005, "correlation {corr}");

    // identical target profiles: their block sums share one distribution
    first.sort_by(f64::total_cmp);
    second.sort_by(f64::total_cmp);
    let grid: Vec<f64> = (1..200).map(|i| i as f64 * 0.1).collect();
    let a = empirical_cdf(&first, &grid);
    let b = empirical_cdf(&second, &grid);
    let ks = a.values.iter().zip(&b.values).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    // two-sample critical value at the 0.1% level
    assert!(ks < 1.95 * (2.0 / nf).sqrt(), "KS distance {ks}");
}

#[test]
fn more_targets_never_raise_outage() {
    let settings = QuadratureSettings::default();
    for n_s in [1, 2] {
        let mk = |l: usize| {
            let cfg = ShoConfig { l, n_paths: vec![5; l], n_c: 3, n_s, gamma_t: 1.0 };
            let ps: Vec<BranchProfile> =
                (1..=l).map(|bs| BranchProfile::new(exponential_mip(0.4, 0.5, 5).gammas, bs).unwrap()).collect();
            OutageModel::new(&cfg, &ps, settings).unwrap()
        };
        let (small, big) = (mk(3), mk(4));
        for i in 0..30 {
            let x = 0.1 + 0.1 * i as f64;
            let (a, b) = (small.outage_cdf(x).unwrap().probability, big.outage_cdf(x).unwrap().probability);
            assert!(b <= a + 1e-9, "N_s={n_s} x={x}: L=4 {b} > L=3 {a}");
        }
    }
}
