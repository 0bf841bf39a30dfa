//! Acceptance criteria, one line per criterion.
//!
//! Runs without the libtest harness so the PASS/FAIL lines are always printed; the
//! process exits nonzero if any criterion fails.

use std::f64::consts::PI;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::Instant;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use hqcalc_core::calculus::{d_calc, hinf_d, hinf_d_with, rational_d, s_calc, CalcOptions};
use hqcalc_core::hnum::{ImaginaryUnit, Quaternion, Sector};
use hqcalc_core::linalg::QMat;
use hqcalc_core::poly::{Poly, Rational};
use hqcalc_core::qop::{
    build_diagonal, build_poly_family, cauchy_kernel_left, cauchy_kernel_right, resolvent_profile, s_resolvent,
    s_spectrum, CommutingOperator, Side,
};
use hqcalc_core::sfun::{
    cf_derivative_fd, make_monomial, make_rational, make_regularizer, product, ClassTag, StemFunction, DEFAULT_SECTOR,
};
use hqcalc_core::harness::{run_suite, SuiteConfig};

type Verdict = Result<String, String>;

fn verdict(ok: bool, msg: String) -> Verdict {
    if ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn q(a: f64, b: f64, c: f64, d: f64) -> Quaternion {
    Quaternion::new(a, b, c, d)
}

fn unit(rng: &mut ChaCha8Rng) -> ImaginaryUnit {
    loop {
        let (a, b, c) = (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let n: f64 = a * a + b * b + c * c;
        if n > 0.01 && n <= 1.0 {
            return ImaginaryUnit::normalized(a, b, c).unwrap();
        }
    }
}

fn random_operator(rng: &mut ChaCha8Rng) -> CommutingOperator {
    let n = rng.gen_range(1..=4);
    let entries: Vec<Quaternion> = (0..n)
        .map(|_| {
            let u = rng.gen_range(0.5..4.0);
            let v = rng.gen_range(0.0..u * (PI / 6.0).tan());
            unit(rng).embed(Complex64::new(u, v))
        })
        .collect();
    build_diagonal(&entries).unwrap()
}

fn poly4() -> CommutingOperator {
    let m = DMatrix::from_fn(4, 4, |i: usize, j: usize| match i.abs_diff(j) {
        0 => 2.0,
        1 => 1.0,
        _ => 0.0,
    });
    build_poly_family(
        &m,
        [
            Poly::new(vec![0.0, 1.0]),
            Poly::new(vec![0.0, 0.3]),
            Poly::new(vec![0.0, 0.0, 0.2]),
            Poly::zero(),
        ],
    )
    .unwrap()
}

fn catalog() -> Vec<(&'static str, CommutingOperator)> {
    vec![
        ("diag(2)", build_diagonal(&[Quaternion::real(2.0)]).unwrap()),
        ("diag(1+2e1)", build_diagonal(&[q(1.0, 2.0, 0.0, 0.0)]).unwrap()),
        ("diag(1+e1,3)", build_diagonal(&[q(1.0, 1.0, 0.0, 0.0), Quaternion::real(3.0)]).unwrap()),
        ("diag(e1)", build_diagonal(&[Quaternion::E1]).unwrap()),
        ("poly4", poly4()),
    ]
}

fn sector() -> Sector {
    Sector::new(DEFAULT_SECTOR).unwrap()
}

fn rational(p: &[f64], q: &[f64]) -> StemFunction {
    make_rational(&Rational::new(Poly::new(p.to_vec()), Poly::new(q.to_vec())), None, sector()).unwrap()
}

fn random_psiq(rng: &mut ChaCha8Rng) -> StemFunction {
    let a0 = rng.gen_range(0.5..2.0) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
    let a1 = rng.gen_range(-1.0..1.0);
    let mut den = Poly::constant(1.0);
    for _ in 0..4 {
        den = &den * &Poly::new(vec![1.0, 1.0 / rng.gen_range(0.5..3.0)]);
    }
    let f = make_rational(&Rational::new(Poly::new(vec![0.0, 0.0, a0, a1]), den), None, sector()).unwrap();
    assert_eq!(f.certificate().class_tag, ClassTag::PsiQ);
    f
}

fn resolvent_point(rng: &mut ChaCha8Rng, max_arg: f64) -> Quaternion {
    let r = 10f64.powf(rng.gen_range(-1.0..1.0));
    let a = rng.gen_range((max_arg + 0.3).min(3.0)..PI);
    unit(rng).embed(Complex64::from_polar(r, a))
}

fn diff(a: &QMat, b: &QMat) -> f64 {
    (a - b).max_abs()
}

fn scale(ms: &[&QMat]) -> f64 {
    ms.iter().map(|m| m.max_abs()).fold(1.0, f64::max)
}

fn opts(tol: f64) -> CalcOptions {
    CalcOptions {
        tol,
        ..CalcOptions::default()
    }
}

fn criterion_1() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut worst: f64 = 0.0;
    let cat = catalog();
    for i in 0..200 {
        let t = if i % 5 == 4 { cat[i % cat.len()].1.clone() } else { random_operator(&mut rng) };
        let w = s_spectrum(&t).unwrap().max_arg();
        let s = resolvent_point(&mut rng, w);
        let p = resolvent_point(&mut rng, w);
        let tb = t.conj();
        let qs = t.pencil(s).unwrap().inverse();
        let qp = t.pencil(p).unwrap().inverse();
        let kernel =
            &qs.mul_right(cauchy_kernel_left(p, s).unwrap()) + &qp.mul_left(cauchy_kernel_right(s, p).unwrap());
        let form1 = &(&qs * &s_resolvent(&t, p, Side::Left).unwrap()) + &(&s_resolvent(&tb, s, Side::Right).unwrap() * &qp);
        let form2 = &(&qs * &s_resolvent(&tb, p, Side::Left).unwrap()) + &(&s_resolvent(&t, s, Side::Right).unwrap() * &qp);
        let sc = scale(&[&kernel, &form1, &form2]);
        worst = worst
            .max(diff(&kernel, &form1) / sc)
            .max(diff(&kernel, &form2) / sc)
            .max(diff(&form1, &form2) / sc);
    }
    verdict(worst <= 1e-9, format!("resolvent equation, 200 cases, worst relative residual {worst:.3e} (<= 1e-9)"))
}

fn kernel_error(s: Quaternion, x: Quaternion, h: f64) -> f64 {
    let fd = cf_derivative_fd(|y| cauchy_kernel_left(s, y), x, h, Side::Left).unwrap();
    let pencil = s * s - s * (2.0 * x.re()) + Quaternion::real(x.norm_sqr());
    let exact = pencil.inv().unwrap() * -2.0;
    (fd - exact).abs() / exact.abs().max(1.0)
}

fn criterion_2() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(102);
    let mut worst: f64 = 0.0;
    let mut order = f64::INFINITY;
    for _ in 0..50 {
        let x = unit(&mut rng).embed(Complex64::new(rng.gen_range(0.5..3.0), rng.gen_range(0.0..1.0)));
        let s = resolvent_point(&mut rng, 0.6) * 2.0;
        worst = worst.max(kernel_error(s, x, 1e-4));
        let (e1, e2) = (kernel_error(s, x, 1e-2), kernel_error(s, x, 5e-3));
        order = order.min((e1 / e2).log2());
    }
    verdict(
        worst <= 1e-5 && order >= 1.8,
        format!("kernel identity, residual {worst:.3e} at h = 1e-4 (<= 1e-5), observed order {order:.3} (O(h^2))"),
    )
}

fn criterion_3() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(103);
    let tol = 1e-7;
    let mut worst_ratio: f64 = 0.0;
    for _ in 0..20 {
        let t = random_operator(&mut rng);
        let f = random_psiq(&mut rng);
        let w = s_spectrum(&t).unwrap().max_arg();
        let theta = f.sector().omega();
        let units = [ImaginaryUnit::E1, unit(&mut rng), unit(&mut rng)];
        let mut values = Vec::new();
        for k in 1..=3 {
            let phi = w + (theta - w) * k as f64 / 4.0;
            for &u in &units {
                let o = CalcOptions {
                    phi: Some(phi),
                    unit: u,
                    ..opts(tol)
                };
                values.push(d_calc(&t, &f, &o).unwrap().value);
            }
        }
        for i in 0..values.len() {
            for j in i + 1..values.len() {
                let r = diff(&values[i], &values[j]) / scale(&[&values[i], &values[j]]);
                worst_ratio = worst_ratio.max(r / (3.0 * (tol + tol)));
            }
        }
    }
    verdict(
        worst_ratio <= 1.0,
        format!("angle/unit independence, 20 cases x 3 angles x 3 units, worst gap {worst_ratio:.3e} of 3(tol1+tol2)"),
    )
}

fn criterion_4() -> Verdict {
    let (p, qq) = (Poly::monomial(2), Poly::linear_power(1.0, 1.0, 3));
    let f = rational(&[0.0, 0.0, 1.0], &[1.0, 3.0, 3.0, 1.0]);
    let mut worst: f64 = 0.0;
    for (name, t) in catalog() {
        if name == "diag(1+e1,3)" {
            continue;
        }
        let quad = d_calc(&t, &f, &opts(1e-8)).unwrap().value;
        let exact = rational_d(&p, &qq, &t).unwrap().form1;
        worst = worst.max(diff(&quad, &exact) / scale(&[&exact]));
        if name == "diag(2)" && quad.max_abs() > 1e-7 {
            return Err(format!("pinned value 0 at diag(2) missed: {:.3e}", quad.max_abs()));
        }
        if name == "diag(e1)" {
            let e = diff(&quad, &QMat::scalar(1, Quaternion::real(-0.5)));
            if e > 1e-7 {
                return Err(format!("pinned value -1/2 at diag(e1) missed by {e:.3e}"));
            }
        }
    }
    verdict(
        worst <= 1e-7,
        format!("rational equivalence on the catalog, worst relative gap {worst:.3e} (<= 1e-7), pinned 0 and -1/2 hold"),
    )
}

fn criterion_5() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(105);
    let f = make_regularizer(3).unwrap();
    let o = opts(1e-10);
    let (mut rule, mut forms): (f64, f64) = (0.0, 0.0);
    for _ in 0..10 {
        let t = random_operator(&mut rng);
        let tb = t.conj();
        let g = random_psiq(&mut rng);
        let dfg = d_calc(&t, &product(&f, &g).unwrap(), &o).unwrap().value;
        let df = d_calc(&t, &f, &o).unwrap().value;
        let dg = d_calc(&t, &g, &o).unwrap().value;
        let (ft, ftb) = (s_calc(&t, &f, &o).unwrap().value, s_calc(&tb, &f, &o).unwrap().value);
        let (gt, gtb) = (s_calc(&t, &g, &o).unwrap().value, s_calc(&tb, &g, &o).unwrap().value);
        let a = &(&df * &gt) + &(&ftb * &dg);
        let b = &(&df * &gtb) + &(&ft * &dg);
        let sc = scale(&[&dfg, &a, &b]);
        rule = rule.max(diff(&dfg, &a) / sc).max(diff(&dfg, &b) / sc);
        forms = forms.max(diff(&a, &b) / sc);
    }
    verdict(
        rule <= 1e-7 && forms <= 1e-9,
        format!("product rule, 10 operators, residual {rule:.3e} (<= 1e-7), forms gap {forms:.3e} (<= 1e-9)"),
    )
}

fn criterion_6() -> Verdict {
    let s = make_monomial(1).unwrap();
    let tol = 1e-7;
    let (mut ident, mut reg, mut gap): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for (_, t) in catalog() {
        let r = hinf_d(&t, &s, &opts(tol)).unwrap();
        ident = ident.max(diff(&r.value, &QMat::scalar(t.n(), Quaternion::real(-2.0))));
        gap = gap.max(r.form_gap.unwrap());
        let n = 3;
        let a = hinf_d_with(&t, &s, &make_regularizer(n).unwrap(), &opts(tol)).unwrap().value;
        let b = hinf_d_with(&t, &s, &make_regularizer(n + 1).unwrap(), &opts(tol)).unwrap().value;
        reg = reg.max(diff(&a, &b) / scale(&[&a, &b]) / (3.0 * tol));
    }
    verdict(
        ident <= 1e-7 && reg <= 1.0 && gap <= 1e-8,
        format!(
            "H-infinity: |Ds(T) + 2I| = {ident:.3e} (<= 1e-7), n vs n+1 gap {reg:.3e} of 3 tol, form gap {gap:.3e} (<= 1e-8)"
        ),
    )
}

fn criterion_7() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(107);
    let o = opts(1e-8);
    let (mut comm, mut imag): (f64, f64) = (0.0, 0.0);
    let mut exact = true;
    let mut ops: Vec<CommutingOperator> = catalog().into_iter().map(|c| c.1).collect();
    for _ in 0..10 {
        ops.push(random_operator(&mut rng));
    }
    for t in &ops {
        let f = random_psiq(&mut rng);
        let d = d_calc(t, &f, &o).unwrap().value;
        let v = s_calc(t, &f, &o).unwrap().value;
        for m in [&d, &v] {
            let c = m.components();
            let sc = c.iter().map(|x| x.norm()).fold(1e-300, f64::max);
            for a in 0..4 {
                for b in a + 1..4 {
                    comm = comm.max((&c[a] * &c[b] - &c[b] * &c[a]).norm() / (sc * sc));
                }
            }
        }
        imag = imag.max(d.max_imaginary() / d.max_abs().max(1.0));
        exact &= d == d_calc(&t.conj(), &f, &o).unwrap().value;
    }
    verdict(
        comm <= 1e-9 && imag <= 1e-10 && exact,
        format!(
            "structure: commutators {comm:.3e} (<= 1e-9), non-real parts {imag:.3e} (<= 1e-10 scale), Df(T) = Df(T̄) exactly: {exact}"
        ),
    )
}

fn criterion_8() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(108);
    let mut ops: Vec<CommutingOperator> = catalog().into_iter().map(|c| c.1).collect();
    for _ in 0..10 {
        ops.push(random_operator(&mut rng));
    }
    let per_decade = 10;
    let mut worst: f64 = 0.0;
    for t in &ops {
        let w = s_spectrum(t).unwrap().max_arg();
        let theta = w + (0.5 * (PI - w)).min(0.3);
        let angles: Vec<f64> = (0..=4).map(|k| theta + (PI - theta) * k as f64 / 4.0).collect();
        let samples = resolvent_profile(t, &angles, 1e-4, 1e4, per_decade).unwrap();
        for &a in &angles {
            let ray: Vec<f64> = samples.iter().filter(|x| x.angle == a).map(|x| x.scaled_q).collect();
            assert!(ray.iter().all(|x| x.is_finite()));
            let cut = ray.len() - per_decade - 1;
            let before = ray[..=cut].iter().cloned().fold(0.0, f64::max);
            let after = ray.iter().cloned().fold(0.0, f64::max);
            worst = worst.max(after / before);
        }
    }
    verdict(
        worst < 1.01,
        format!("estimate: running-max ratio over the last decade {worst:.5} (< 1.01), radii 1e-4 to 1e4"),
    )
}

fn criterion_9() -> Verdict {
    let start = Instant::now();
    let report = run_suite(&SuiteConfig::default()).map_err(|e| e.to_string())?;
    let secs = start.elapsed().as_secs_f64();
    let mut direct = 0;
    for (_, t) in catalog() {
        let f = rational(&[0.0, 0.0, 1.0], &[1.0, 3.0, 3.0, 1.0]);
        direct = direct.max(d_calc(&t, &f, &opts(1e-7)).unwrap().diagnostics.max_nodes);
        direct = direct.max(s_calc(&t, &f, &opts(1e-7)).unwrap().diagnostics.max_nodes);
    }
    let nodes = report.max_nodes().max(direct);
    verdict(
        secs < 60.0 && nodes < 1 << 14 && report.pass,
        format!(
            "performance: verify --suite all took {secs:.1} s (< 60 s), {} of {} checks passed, max nodes per integral {nodes} (< 16384)",
            report.passed,
            report.checks.len()
        ),
    )
}

fn main() -> ExitCode {
    let criteria: [(u32, fn() -> Verdict); 9] = [
        (1, criterion_1),
        (2, criterion_2),
        (3, criterion_3),
        (4, criterion_4),
        (5, criterion_5),
        (6, criterion_6),
        (7, criterion_7),
        (8, criterion_8),
        (9, criterion_9),
    ];
    let mut failures = 0;
    for (n, run) in criteria {
        let line = match catch_unwind(AssertUnwindSafe(run)) {
            Ok(Ok(msg)) => format!("PASS criterion {n}: {msg}"),
            Ok(Err(msg)) => {
                failures += 1;
                format!("FAIL criterion {n}: {msg}")
            }
            Err(_) => {
                failures += 1;
                format!("FAIL criterion {n}: panicked")
            }
        };
        println!("{line}");
    }
    println!("acceptance: {} of 9 criteria passed", 9 - failures);
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
