//! Acceptance criteria, one line each. Runs without the libtest harness so
//! the report is always printed; exits non-zero if any criterion fails.

use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use num_bigint::BigInt;
use num_complex::Complex64;
use num_traits::{One, Signed, Zero};
use proptest::prelude::*;
use proptest::test_runner::{Config, RngSeed, TestRunner};

use freewishart::closedform::{self, Family};
use freewishart::ensembles::{simulate, EnsembleConfig};
use freewishart::isotropic::{
    radial_cdf, rescale_moments, square_modulus_moments, sum_unitaries_cumulants,
};
use freewishart::measures::ResolventPolynomial;
use freewishart::moments::{
    fuss_catalan, moments_from_cumulants, moments_from_density, moments_from_resolvent,
    moments_from_s_transform,
};
use freewishart::poly::{Rat, RatPoly};
use freewishart::resolvent::{branch_at, green_at, support_edges, BranchPath, Spectrum};
use freewishart::roots::roots_at;
use freewishart::{build_resolvent, MeasureSpec};

type Outcome = Result<String, String>;

fn spec(s: &str) -> MeasureSpec {
    s.parse().unwrap()
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(t: Instant, limit: Duration) -> Result<(), String> {
    ensure(t.elapsed() < limit, || {
        format!("took {:.1?}, limit {limit:?}", t.elapsed())
    })
}

// ---------------------------------------------------------------------------
// Independent bivariate integer polynomials in (w, z) for the expected
// equations, normalised the same way as the library: primitive, with the
// lowest-z coefficient of the top w power positive.

#[derive(Clone, Debug, PartialEq)]
struct Bi(BTreeMap<(usize, usize), BigInt>);

impl Bi {
    fn term(c: i64, i: usize, j: usize) -> Bi {
        let mut m = BTreeMap::new();
        if c != 0 {
            m.insert((i, j), BigInt::from(c));
        }
        Bi(m)
    }
    /// `sum c_i w^i`.
    fn w(coeffs: &[i64]) -> Bi {
        coeffs
            .iter()
            .enumerate()
            .fold(Bi::term(0, 0, 0), |acc, (i, &c)| {
                acc.add(&Bi::term(c, i, 0))
            })
    }
    fn z(j: usize) -> Bi {
        Bi::term(1, 0, j)
    }
    fn add(&self, o: &Bi) -> Bi {
        let mut m = self.0.clone();
        for (k, v) in &o.0 {
            *m.entry(*k).or_insert_with(BigInt::zero) += v;
        }
        m.retain(|_, v| !v.is_zero());
        Bi(m)
    }
    fn neg(&self) -> Bi {
        Bi(self.0.iter().map(|(k, v)| (*k, -v)).collect())
    }
    fn sub(&self, o: &Bi) -> Bi {
        self.add(&o.neg())
    }
    fn mul(&self, o: &Bi) -> Bi {
        let mut out = Bi::term(0, 0, 0);
        for ((i, j), a) in &self.0 {
            for ((k, l), b) in &o.0 {
                out = out.add(&Bi(BTreeMap::from([((i + k, j + l), a * b)])));
            }
        }
        out
    }
    fn pow(&self, n: u32) -> Bi {
        (0..n).fold(Bi::term(1, 0, 0), |acc, _| acc.mul(self))
    }
    fn normalised(&self) -> Bi {
        let g = self
            .0
            .values()
            .fold(BigInt::zero(), |g, v| num_integer::Integer::gcd(&g, v));
        let top = self.0.keys().map(|k| k.0).max().unwrap();
        let lead = self
            .0
            .iter()
            .filter(|(k, _)| k.0 == top)
            .min_by_key(|(k, _)| k.1)
            .unwrap()
            .1;
        let g = if lead.is_negative() { -g } else { g };
        Bi(self.0.iter().map(|(k, v)| (*k, v / &g)).collect())
    }
    fn from_library(p: &ResolventPolynomial) -> Result<Bi, String> {
        let mut m = BTreeMap::new();
        for j in 0..=p.z_degree() {
            for i in 0..=p.w_degree() {
                let c = p.coeff(i, j);
                if !c.is_integer() {
                    return Err(format!("non-integer coefficient {c} at w^{i} z^{j}"));
                }
                if !c.is_zero() {
                    m.insert((i, j), c.to_integer());
                }
            }
        }
        Ok(Bi(m))
    }
    fn to_rows(&self) -> Vec<RatPoly> {
        let zdeg = self.0.keys().map(|k| k.1).max().unwrap();
        let wdeg = self.0.keys().map(|k| k.0).max().unwrap();
        (0..=zdeg)
            .map(|j| {
                RatPoly::new(
                    (0..=wdeg)
                        .map(|i| {
                            Rat::from_integer(self.0.get(&(i, j)).cloned().unwrap_or_default())
                        })
                        .collect(),
                )
            })
            .collect()
    }
}

fn c1() -> Outcome {
    let t = Instant::now();
    let one_w = Bi::w(&[1, 1]);
    let w = Bi::w(&[0, 1]);
    let w_plus_2 = Bi::w(&[2, 1]);
    let cases: Vec<(&str, Bi)> = vec![
        // wz = (1+w)^3
        ("mp(1)^2", w.mul(&Bi::z(1)).sub(&one_w.pow(3))),
        // w^3 + (3 - z^2) w^2 + 3w + 1 = 0
        ("mp(1)^(1/2)", Bi::w(&[1, 3, 3, 1]).sub(&Bi::term(1, 2, 2))),
        // w^4 + 4w^3 + 6w^2 + w(4 - z) + 1 = 0
        ("mp(1)^3", Bi::w(&[1, 4, 6, 4, 1]).sub(&Bi::term(1, 1, 1))),
        // w^4 + (4 - z^3) w^3 + 6w^2 + 4w + 1 = 0
        (
            "mp(1)^(1/3)",
            Bi::w(&[1, 4, 6, 4, 1]).sub(&Bi::term(1, 3, 3)),
        ),
        // zw = (1+w)(1+cw), c = 1/4 (times 4) and c = 3
        (
            "mp(1/4)",
            Bi::term(4, 1, 1).sub(&one_w.mul(&Bi::w(&[4, 1]))),
        ),
        ("mp(3)", w.mul(&Bi::z(1)).sub(&one_w.mul(&Bi::w(&[1, 3])))),
        ("mp(1)", w.mul(&Bi::z(1)).sub(&one_w.pow(2))),
        // wz(w+2) = 2(1+w)^2
        (
            "as",
            w.mul(&w_plus_2)
                .mul(&Bi::z(1))
                .sub(&one_w.pow(2).mul(&Bi::w(&[2]))),
        ),
        // wz(w+2) = 2(1+w)^3
        (
            "as*mp(1)",
            w.mul(&w_plus_2)
                .mul(&Bi::z(1))
                .sub(&one_w.pow(3).mul(&Bi::w(&[2]))),
        ),
        // wz(w+2) = 2(1+cw)(1+w)^2 at c = 2, 4
        (
            "as*mp(2)",
            w.mul(&w_plus_2)
                .mul(&Bi::z(1))
                .sub(&Bi::w(&[2, 4]).mul(&one_w.pow(2))),
        ),
        (
            "as*mp(4)",
            w.mul(&w_plus_2)
                .mul(&Bi::z(1))
                .sub(&Bi::w(&[2, 8]).mul(&one_w.pow(2))),
        ),
        // c = 1/2 reduces to wz = (1+w)^2
        ("as*mp(1/2)", w.mul(&Bi::z(1)).sub(&one_w.pow(2))),
        // wz(w+2) = 2(1+w)^4
        (
            "as*mp(1)^2",
            w.mul(&w_plus_2)
                .mul(&Bi::z(1))
                .sub(&one_w.pow(4).mul(&Bi::w(&[2]))),
        ),
        // (w+2) w^2 z^2 = 2(w+1)^3 and (w+2)^2 wz = 4(w+1)^3
        (
            "as^(1/2)",
            w_plus_2
                .mul(&w.pow(2))
                .mul(&Bi::z(2))
                .sub(&one_w.pow(3).mul(&Bi::w(&[2]))),
        ),
        (
            "as^2",
            w_plus_2
                .pow(2)
                .mul(&w)
                .mul(&Bi::z(1))
                .sub(&one_w.pow(3).mul(&Bi::w(&[4]))),
        ),
    ];
    for (s, expected) in &cases {
        let got = Bi::from_library(&build_resolvent(&spec(s)))?;
        let want = expected.normalised();
        ensure(got == want, || {
            format!("{s}: got {got:?}, expected {want:?}")
        })?;
    }
    within(t, Duration::from_secs(1))?;
    Ok(format!("{} polynomials equal", cases.len()))
}

fn c2() -> Outcome {
    let t = Instant::now();
    let mut worst: f64 = 0.0;
    for f in closedform::ALL {
        let s = Spectrum::from_spec(&f.spec()).map_err(|e| format!("{f}: {e}"))?;
        let (a, b) = f.support();
        let margin = 0.01 * (b - a);
        let xs: Vec<f64> = (0..200)
            .map(|k| a + margin + (b - a - 2.0 * margin) * k as f64 / 199.0)
            .collect();
        let exact: Vec<f64> = xs.iter().map(|&x| f.eval(x)).collect();
        let peak = exact.iter().cloned().fold(0.0, f64::max);
        for (&x, &e) in xs.iter().zip(&exact) {
            let r = s.density(x).map_err(|e| format!("{f} at {x}: {e}"))?;
            let err = (r - e).abs() / peak;
            worst = worst.max(err);
            ensure(err < 1e-6, || {
                format!("{f} at x = {x}: {r} vs {e} (relative {err:e})")
            })?;
        }
    }
    within(t, Duration::from_secs(30))?;
    Ok(format!(
        "max relative error {worst:.2e} over 9 families, {:.1?}",
        t.elapsed()
    ))
}

fn c3() -> Outcome {
    let t = Instant::now();
    for s in 1..=4u32 {
        let m = moments_from_resolvent(&build_resolvent(&spec(&format!("mp(1)^{s}"))), 12)
            .map_err(|e| e.to_string())?;
        for n in 0..=12u64 {
            let want = fuss_catalan(&Rat::from_integer(s.into()), n).map_err(|e| e.to_string())?;
            let got = m.get(n as usize).unwrap();
            ensure(*got == want, || {
                format!("s = {s}, n = {n}: {got} vs {want}")
            })?;
        }
    }
    let m =
        moments_from_resolvent(&build_resolvent(&spec("mp(1)")), 4).map_err(|e| e.to_string())?;
    let catalan: Vec<Rat> = [1, 1, 2, 5, 14]
        .iter()
        .map(|&v| Rat::from_integer(BigInt::from(v)))
        .collect();
    ensure(m.values() == catalan.as_slice(), || {
        format!("Catalan row {:?}", m.values())
    })?;
    within(t, Duration::from_secs(5))?;
    Ok("Fuss-Catalan numbers exact for s = 1..4, n <= 12".into())
}

fn binomial(n: u64, k: u64) -> BigInt {
    (0..k).fold(BigInt::one(), |acc, i| {
        acc * BigInt::from(n - i) / BigInt::from(i + 1)
    })
}

fn c4() -> Outcome {
    // Bures cubic wz(w+2) - 2(1+w)^3 built directly, not from an S-transform
    let w = Bi::w(&[0, 1]);
    let cubic = w
        .mul(&Bi::w(&[2, 1]))
        .mul(&Bi::z(1))
        .sub(&Bi::w(&[1, 1]).pow(3).mul(&Bi::w(&[2])));
    let poly = ResolventPolynomial::from_rows(cubic.to_rows()).map_err(|e| e.to_string())?;
    let from_cubic = moments_from_resolvent(&poly, 10).map_err(|e| e.to_string())?;
    let from_s = moments_from_s_transform(&spec("as*mp(1)"), 10).map_err(|e| e.to_string())?;
    ensure(from_cubic == from_s, || format!("{from_cubic} vs {from_s}"))?;

    let kappa = sum_unitaries_cumulants(2, 16);
    let h = moments_from_cumulants(&kappa).map_err(|e| e.to_string())?;
    let h2 = square_modulus_moments(&h).map_err(|e| e.to_string())?;
    let chain = rescale_moments(&h2, &Rat::from_integer(2.into())).map_err(|e| e.to_string())?;
    for k in 0..=8u64 {
        let want = Rat::new(binomial(2 * k, k), BigInt::from(2).pow(k as u32));
        let got = chain.get(k as usize).ok_or("chain too short")?;
        ensure(*got == want, || {
            format!("chain moment {k}: {got} vs {want}")
        })?;
    }
    Ok("Bures moments agree to order 10; unitary chain gives arcsine moments to order 8".into())
}

fn c5() -> Outcome {
    let mut worst: f64 = 0.0;
    for (s, fam) in [
        ("as*mp(1)*mp(1/2)", Family::Fc2),
        ("as*mp(1/2)", Family::Mp(1.0)),
    ] {
        let sp = Spectrum::from_spec(&spec(s)).map_err(|e| e.to_string())?;
        let (a, b) = fam.support();
        let (sa, sb) = sp.support();
        ensure((sa - a).abs() < 1e-8 && (sb - b).abs() < 1e-8, || {
            format!("{s}: support [{sa}, {sb}]")
        })?;
        for k in 1..200 {
            let x = a + (b - a) * k as f64 / 200.0;
            let r = sp.density(x).map_err(|e| e.to_string())?;
            let e = fam.eval(x);
            worst = worst.max((r - e).abs());
            ensure((r - e).abs() < 1e-8, || {
                format!("{s} vs {fam} at {x}: {r} vs {e}")
            })?;
        }
    }
    Ok(format!("pointwise gap {worst:.2e}"))
}

fn c6() -> Outcome {
    let mut worst: f64 = 0.0;
    for f in closedform::ALL {
        let s = Spectrum::from_spec(&f.spec()).map_err(|e| format!("{f}: {e}"))?;
        let m = moments_from_density(&s, 1).map_err(|e| format!("{f}: {e}"))?;
        worst = worst.max((m[0] - 1.0).abs()).max((m[1] - 1.0).abs());
        ensure(
            (m[0] - 1.0).abs() < 1e-5 && (m[1] - 1.0).abs() < 1e-5,
            || format!("{f}: mass {} mean {}", m[0], m[1]),
        )?;
    }
    let mut cont = Vec::new();
    for (c, want) in [(2, 0.5), (4, 0.25)] {
        let s = Spectrum::from_spec(&spec(&format!("as*mp({c})"))).map_err(|e| e.to_string())?;
        let mass = s.continuous_mass().map_err(|e| e.to_string())?;
        ensure((mass - want).abs() < 1e-3, || {
            format!("c = {c}: continuous mass {mass}")
        })?;
        cont.push(mass);
    }
    Ok(format!(
        "mass/mean within {worst:.1e}; continuous masses {:.6}, {:.6}",
        cont[0], cont[1]
    ))
}

fn c7() -> Outcome {
    let s3 = 3f64.sqrt();
    let mut cases: Vec<(String, (f64, f64))> = vec![
        ("mp(1)".into(), (0.0, 4.0)),
        ("as".into(), (0.0, 2.0)),
        ("mp(1)^2".into(), (0.0, 27.0 / 4.0)),
        ("mp(1)^3".into(), (0.0, 256.0 / 27.0)),
        ("mp(1)^(1/2)".into(), (0.0, (27.0f64 / 4.0).sqrt())),
        ("mp(1)^(1/3)".into(), (0.0, (256.0f64 / 27.0).cbrt())),
        ("as*mp(1)".into(), (0.0, 3.0 * s3)),
        ("as*mp(1)^2".into(), (0.0, 8.0)),
    ];
    for (c, cs) in [(0.25, "1/4"), (0.5, "1/2"), (2.0, "2"), (3.0, "3")] {
        let r: f64 = 2.0 * f64::sqrt(c);
        cases.push((format!("mp({cs})"), (1.0 + c - r, 1.0 + c + r)));
    }
    let mut worst: f64 = 0.0;
    for (s, (a, b)) in &cases {
        let (x0, x1) =
            support_edges(&build_resolvent(&spec(s))).map_err(|e| format!("{s}: {e}"))?;
        let err = (x0 - a).abs().max((x1 - b).abs());
        worst = worst.max(err);
        ensure(err < 1e-8, || format!("{s}: [{x0}, {x1}] vs [{a}, {b}]"))?;
    }
    Ok(format!("{} supports within {worst:.1e}", cases.len()))
}

fn c8() -> Outcome {
    let t = Instant::now();
    let base = "N=256,samples=40,seed=20240611";
    let mut report = Vec::new();
    for (label, s) in [
        ("s=1", "mp(1)"),
        ("s=2", "mp(1)^2"),
        ("s=3", "mp(1)^3"),
        ("bures", "as*mp(1)"),
        ("P_{2,1/2}", "mp(1)*mp(1/2)"),
    ] {
        let sp = spec(s);
        let cfg = base
            .parse::<EnsembleConfig>()
            .unwrap()
            .with_spec(&sp)
            .map_err(|e| e.to_string())?;
        let spectrum = simulate(&cfg).map_err(|e| e.to_string())?;
        let ks = freewishart::cli::ks_against(&spectrum, &sp).map_err(|e| e.to_string())?;
        ensure(ks < 0.05, || format!("{label}: KS {ks}"))?;
        report.push(format!("{label} {ks:.4}"));
    }
    let cfg: EnsembleConfig = format!("{base},k=2,c=2").parse().unwrap();
    let zeros = simulate(&cfg).map_err(|e| e.to_string())?.zero_fraction();
    ensure((zeros - 0.5).abs() < 0.05, || {
        format!("zero fraction {zeros}")
    })?;
    within(t, Duration::from_secs(300))?;
    Ok(format!(
        "KS {}; zero fraction {zeros}; {:.0?}",
        report.join(", "),
        t.elapsed()
    ))
}

fn c9() -> Outcome {
    let mut worst: f64 = 0.0;
    for k in 0..=50 {
        let r = k as f64 / 50.0;
        let f1 = radial_cdf(&spec("mp(1)"), r).map_err(|e| e.to_string())?;
        let f2 = radial_cdf(&spec("mp(1)^2"), r).map_err(|e| e.to_string())?;
        worst = worst.max((f1 - r * r).abs()).max((f2 - r).abs());
        ensure((f1 - r * r).abs() < 1e-10 && (f2 - r).abs() < 1e-10, || {
            format!("r = {r}: {f1}, {f2}")
        })?;
    }
    let h = moments_from_cumulants(&sum_unitaries_cumulants(2, 2)).map_err(|e| e.to_string())?;
    let m1 = square_modulus_moments(&h)
        .map_err(|e| e.to_string())?
        .get(1)
        .cloned();
    ensure(m1 == Some(Rat::from_integer(2.into())), || {
        format!("first moment {m1:?}")
    })?;
    Ok(format!(
        "radial CDFs within {worst:.1e}; first moment of |U1+U2|^2 = 2"
    ))
}

fn upper_half_plane() -> impl Strategy<Value = Complex64> {
    (-2.0f64..12.0, -6.0f64..1.0).prop_map(|(x, ly)| Complex64::new(x, 10f64.powf(ly)))
}

fn c10() -> Outcome {
    let mut cases = 0;
    for (i, f) in closedform::ALL.iter().enumerate() {
        let poly = build_resolvent(&f.spec());
        let config = Config {
            cases: 100,
            rng_seed: RngSeed::Fixed(0x5eed + i as u64),
            failure_persistence: None,
            ..Config::default()
        };
        let mut runner = TestRunner::new(config);
        let result = runner.run(
            &(upper_half_plane(), 0.0f64..std::f64::consts::PI),
            |(z, phase)| {
                let e = |e: freewishart::Error| TestCaseError::fail(format!("{f} at {z}: {e}"));
                // conjugate-pair closure of the root set
                let up = roots_at(&poly, z).map_err(e)?.roots;
                let down = roots_at(&poly, z.conj()).map_err(e)?.roots;
                for r in &up {
                    let d = down
                        .iter()
                        .map(|s| (s - r.conj()).norm())
                        .fold(f64::INFINITY, f64::min);
                    prop_assert!(
                        d <= 1e-8 * (1.0 + r.norm()),
                        "{f}: root {r} at {z} has no conjugate partner"
                    );
                }
                // Herglotz sign
                let g = green_at(&poly, z).map_err(e)?;
                prop_assert!(g.im <= 0.0, "{f}: Im G({z}) = {}", g.im);
                // zG -> 1
                let big = Complex64::from_polar(1e7, phase.max(1e-3));
                let zg = big * green_at(&poly, big).map_err(e)?;
                prop_assert!((zg - 1.0).norm() < 1e-5, "{f}: zG({big}) = {zg}");
                // independence of the continuation path
                let a = branch_at(&poly, z, BranchPath::Vertical).map_err(e)?;
                let b = branch_at(&poly, z, BranchPath::LShaped).map_err(e)?;
                prop_assert!(
                    (a - b).norm() <= 1e-8 * (1.0 + a.norm()),
                    "{f}: paths disagree at {z}: {a} vs {b}"
                );
                Ok(())
            },
        );
        result.map_err(|e| e.to_string())?;
        cases += 100;
    }
    Ok(format!("{cases} randomized cases over 9 families"))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("resolvent construction exactness", c1),
        ("oracle equivalence", c2),
        ("moment exactness", c3),
        ("Bures factorization", c4),
        ("identities", c5),
        ("mass and atoms", c6),
        ("supports", c7),
        ("Monte Carlo", c8),
        ("radial law", c9),
        ("property suite", c10),
    ];
    let filter: Vec<String> = std::env::args()
        .skip(1)
        .filter(|a| !a.starts_with('-'))
        .collect();
    let mut failed = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        let id = format!("{}", k + 1);
        if !filter.is_empty() && !filter.iter().any(|f| *f == id || name.contains(f.as_str())) {
            continue;
        }
        let t = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default())
        });
        match outcome {
            Ok(detail) => println!(
                "criterion {id:>2} PASS  {name}: {detail} [{:.2?}]",
                t.elapsed()
            ),
            Err(why) => {
                failed += 1;
                println!(
                    "criterion {id:>2} FAIL  {name}: {why} [{:.2?}]",
                    t.elapsed()
                );
            }
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
