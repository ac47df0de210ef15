use nalgebra::{Matrix2, Vector2};
use proptest::prelude::*;
use skewric::dynamics::{
    integrate_geodesic, inverse_legendre, legendre, first_integral_drift, time_reversal_residual,
    wong_first_integral, CotangentState, FrameData, GeodesicState, PhaseState,
};
use skewric::lie2::{classify_subalgebra, commutator, killing, mu, normal_form_in_basis};
use skewric::surface::wong_connection;
use skewric::symexpr::{Func, Node};
use skewric::{Chart2, Connection2, OneForm2, ScalarField, Sampling};

fn node(n: Node) -> ScalarField {
    ScalarField::from_node(n)
}

/// Fields that stay finite and smooth on `[-1, 1]²`: denominators and log
/// arguments are kept positive, powers nonnegative.
fn smooth_field() -> impl Strategy<Value = ScalarField> {
    let leaf = prop_oneof![
        (-3i32..=3).prop_map(|k| ScalarField::constant(k as f64 / 2.0)),
        (0usize..2).prop_map(ScalarField::var),
    ];
    leaf.prop_recursive(4, 24, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| node(Node::Add(a, b))),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| node(Node::Sub(a, b))),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| node(Node::Mul(a, b))),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| {
                let den = node(Node::Add(ScalarField::constant(2.0), node(Node::Func(Func::Cos, b))));
                node(Node::Div(a, den))
            }),
            (inner.clone(), 0i32..4).prop_map(|(a, n)| node(Node::Pow(a, n))),
            (inner.clone(), prop::sample::select(vec![Func::Sin, Func::Cos, Func::Tanh]))
                .prop_map(|(a, f)| node(Node::Func(f, a))),
            inner.clone().prop_map(|a| node(Node::Func(Func::Exp, node(Node::Func(Func::Sin, a))))),
            inner.prop_map(|a| {
                let arg = node(Node::Add(ScalarField::constant(2.0), node(Node::Func(Func::Tanh, a))));
                node(Node::Func(Func::Log, arg))
            }),
        ]
    })
}

/// Arbitrary trees in the printable grammar, including negative constants and powers.
fn any_field() -> impl Strategy<Value = ScalarField> {
    let leaf = prop_oneof![
        (-20i32..=20).prop_map(|k| ScalarField::constant(k as f64 / 4.0)),
        Just(ScalarField::constant(1.5e-7)),
        (0usize..4).prop_map(ScalarField::var),
    ];
    leaf.prop_recursive(5, 40, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| node(Node::Add(a, b))),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| node(Node::Sub(a, b))),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| node(Node::Mul(a, b))),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| node(Node::Div(a, b))),
            (inner.clone(), -3i32..4).prop_map(|(a, n)| node(Node::Pow(a, n))),
            (inner, prop::sample::select(Func::ALL.to_vec())).prop_map(|(a, f)| node(Node::Func(f, a))),
        ]
    })
}

fn point() -> impl Strategy<Value = [f64; 2]> {
    [-1.0f64..1.0, -1.0f64..1.0]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn derivative_matches_central_difference(f in smooth_field(), p in point(), j in 0usize..2) {
        let h = 1e-5;
        let (mut lo, mut hi) = (p, p);
        lo[j] -= h;
        hi[j] += h;
        let fd = (f.eval(&hi).unwrap() - f.eval(&lo).unwrap()) / (2.0 * h);
        let exact = f.diff(j).eval(&p).unwrap();
        let tol = 1e-5 * (1.0 + f.eval(&p).unwrap().abs()) * 100.0;
        prop_assert!((fd - exact).abs() <= tol, "{f}: fd {fd}, exact {exact}");
    }

    #[test]
    fn third_order_partials_commute(f in smooth_field(), p in point()) {
        let orders = [[0, 0, 1], [0, 1, 0], [1, 0, 0]];
        let vals: Vec<f64> = orders
            .iter()
            .map(|o| f.diff(o[0]).diff(o[1]).diff(o[2]).eval(&p).unwrap())
            .collect();
        let scale = 1.0 + vals.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for v in &vals[1..] {
            prop_assert!((v - vals[0]).abs() <= 1e-10 * scale, "{f}: {vals:?}");
        }
    }

    #[test]
    fn printer_then_parser_is_identity(f in any_field()) {
        let text = f.to_string();
        let back = ScalarField::parse(&text, 4).unwrap();
        prop_assert_eq!(back.structural_cmp(&f), std::cmp::Ordering::Equal, "{}", text);
        prop_assert_eq!(back.to_string(), text);
    }

    #[test]
    fn folding_preserves_values(f in smooth_field(), p in point()) {
        let a = f.eval(&p).unwrap();
        let b = f.fold_constants().eval(&p).unwrap();
        prop_assert!((a - b).abs() <= 1e-9 * (1.0 + a.abs()), "{f}: {a} vs {b}");
    }
}

fn chart() -> Chart2 {
    Chart2::new([[-1.0, 1.0], [-1.0, 1.0]])
        .unwrap()
        .with_sampling(Sampling { count: 20, seed: 24389 })
}

/// Polynomial of total degree at most `deg` in `y1, y2` with small integer coefficients.
fn poly(deg: u32) -> impl Strategy<Value = ScalarField> {
    let monomials: Vec<(i32, i32)> = (0..=deg as i32)
        .flat_map(|i| (0..=deg as i32 - i).map(move |j| (i, j)))
        .collect();
    prop::collection::vec(-2i32..=2, monomials.len()).prop_map(move |coefs| {
        let terms: Vec<ScalarField> = coefs
            .iter()
            .zip(&monomials)
            .filter(|(c, _)| **c != 0)
            .map(|(c, (i, j))| {
                ScalarField::constant(*c as f64)
                    * ScalarField::powi(&ScalarField::var(0), *i)
                    * ScalarField::powi(&ScalarField::var(1), *j)
            })
            .collect();
        ScalarField::sum(&terms)
    })
}

fn form(deg: u32) -> impl Strategy<Value = OneForm2> {
    (poly(deg), poly(deg)).prop_map(|(a, b)| OneForm2::new(a, b))
}

fn generic_connection() -> impl Strategy<Value = Connection2> {
    prop::collection::vec(poly(2), 8).prop_map(|g| {
        Connection2::from_fn(chart(), |l, j, k| g[l * 4 + j * 2 + k].clone()).unwrap()
    })
}

/// Mixes generic connections with families whose Ricci tensor is skew.
fn mixed_connection() -> impl Strategy<Value = Connection2> {
    prop_oneof![
        generic_connection(),
        form(2).prop_map(|xi| Connection2::flat(chart()).shift(&xi, -1.0)),
        poly(3).prop_map(|phi| wong_connection(&phi, chart())),
        (poly(3), form(2)).prop_map(|(phi, xi)| wong_connection(&phi, chart()).shift(&xi, 1.0)),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn skew_ricci_iff_projectively_flat(c in mixed_connection()) {
        let skew = c.is_ricci_skew(1e-9).unwrap().holds;
        let pflat = c.is_projectively_flat(1e-9).unwrap().holds;
        prop_assert_eq!(skew, pflat);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn shift_changes_curvature_by_dxi(c in generic_connection(), xi in form(2)) {
        let before = c.curvature().endomorphism();
        let after = c.shift(&xi, 1.0).curvature().endomorphism();
        let dxi = xi.exterior_d().0;
        for p in chart().points().unwrap() {
            let d = dxi.eval(&p).unwrap();
            for m in 0..2 {
                for k in 0..2 {
                    let id = if m == k { d } else { 0.0 };
                    let r = after[m][k].eval(&p).unwrap() - before[m][k].eval(&p).unwrap() + id;
                    prop_assert!(r.abs() <= 1e-9, "residual {r}");
                }
            }
        }
    }

    #[test]
    fn shift_adds_to_torsion_exactly(c in generic_connection(), xi in form(2)) {
        let before = c.torsion_form();
        let after = c.shift(&xi, 1.0).torsion_form();
        for j in 0..2 {
            let diff = (after.component(j) - before.component(j) - xi.component(j)).fold_constants();
            prop_assert!(diff.is_zero(), "{diff}");
        }
    }

    #[test]
    fn wong_ricci_is_minus_mixed_hessian(phi in poly(4)) {
        let ric = wong_connection(&phi, chart()).ricci();
        let defect = (&ric[0][1] + phi.diff(0).diff(1)).fold_constants();
        prop_assert!(defect.is_zero(), "{defect}");
        for p in chart().points().unwrap() {
            prop_assert!(ric[0][0].eval(&p).unwrap().abs() <= 1e-12);
        }
    }

    #[test]
    fn non_closed_potential_gives_projectively_flat_curved(xi in form(2)) {
        let dxi = xi.exterior_d().0.fold_constants();
        prop_assume!(!dxi.is_zero());
        let nabla = Connection2::flat(chart()).shift(&xi, -1.0);
        prop_assert!(nabla.is_projectively_flat(1e-10).unwrap().holds);
        let curv = nabla.curvature();
        let worst = chart().points().unwrap().iter().map(|p| curv.max_abs_at(p).unwrap()).fold(0.0, f64::max);
        prop_assert!(worst > 0.0);
    }
}

fn traceless() -> impl Strategy<Value = Matrix2<f64>> {
    [-2.0f64..2.0, -2.0f64..2.0, -2.0f64..2.0].prop_map(|[p, q, r]| Matrix2::new(p, q, r, -p))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn bracket_is_twice_the_volume_form(a in traceless(), b in traceless(), c in traceless()) {
        let lhs = killing(&commutator(&a, &b), &c);
        prop_assert!((lhs - 2.0 * mu(&a, &b, &c)).abs() <= 1e-10);
    }

    #[test]
    fn bracket_is_orthogonal(a in traceless(), b in traceless()) {
        let br = commutator(&a, &b);
        prop_assert!(killing(&br, &a).abs() <= 1e-10);
        prop_assert!(killing(&br, &b).abs() <= 1e-10);
    }

    #[test]
    fn normal_form_in_any_basis(w in [-2.0f64..2.0, -2.0f64..2.0], wp in [-2.0f64..2.0, -2.0f64..2.0]) {
        let (w, wp) = (Vector2::from(w), Vector2::from(wp));
        let det = w.x * wp.y - w.y * wp.x;
        prop_assume!(det.abs() > 0.1);
        let (a, b) = normal_form_in_basis(w, wp).unwrap();
        let scale = 1.0 + a.amax() * b.amax();
        prop_assert!((commutator(&a, &b) - a).amax() <= 1e-12 * scale);
    }

    #[test]
    fn classification_output(g in [-2.0f64..2.0, -2.0f64..2.0, -2.0f64..2.0, -2.0f64..2.0],
                             dir in [-1.0f64..1.0, -1.0f64..1.0],
                             mix in [-2.0f64..2.0, -2.0f64..2.0, -2.0f64..2.0, -2.0f64..2.0]) {
        let gm = Matrix2::new(g[0], g[1], g[2], g[3]);
        prop_assume!(gm.determinant().abs() > 0.2);
        prop_assume!(dir[0].hypot(dir[1]) > 0.1);
        let mm = Matrix2::new(mix[0], mix[1], mix[2], mix[3]);
        prop_assume!(mm.determinant().abs() > 0.2);
        let (a, b) = skewric::lie2::subalgebra_from_line(dir).unwrap();
        let gi = gm.try_inverse().unwrap();
        let (a, b) = (gm * a * gi, gm * b * gi);
        let (a0, b0) = (a * mm[(0, 0)] + b * mm[(0, 1)], a * mm[(1, 0)] + b * mm[(1, 1)]);
        let nf = classify_subalgebra(&a0, &b0, 1e-9).unwrap();
        let scale = nf.a.amax().max(1.0);
        prop_assert!(killing(&nf.a, &nf.a).abs() <= 1e-9 * scale * scale);
        prop_assert!((commutator(&nf.a, &nf.b) - nf.a).amax() <= 1e-9 * scale);
    }
}

fn wide_chart() -> Chart2 {
    Chart2::new([[-3.0, 3.0], [-3.0, 3.0]])
        .unwrap()
        .with_sampling(Sampling { count: 20, seed: 24389 })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn legendre_pair_is_inverse(y in point(), a in prop_oneof![-3.0f64..-0.05, 0.05f64..3.0], b in -3.0f64..3.0) {
        let p = PhaseState { y, a, b };
        let back = inverse_legendre(&legendre(&p).unwrap()).unwrap();
        prop_assert!((back.a - a).abs() <= 1e-14 * (1.0 + a.abs()));
        prop_assert!((back.b - b).abs() <= 1e-14 * (1.0 + b.abs()) * (1.0 + a.abs()).powi(2));
    }

    #[test]
    fn wong_geodesics_take_one_branch(y in point(), v in prop_oneof![Just([0.0, 0.0]), [-1.0f64..1.0, -1.0f64..1.0]]) {
        let phi = ScalarField::parse("y1*y2", 2).unwrap();
        let c = wong_connection(&phi, wide_chart());
        let tr = integrate_geodesic(&c, GeodesicState::new(y, v), 1.0, 1e-3).unwrap();
        prop_assume!(tr.halted.is_none());
        let d = first_integral_drift(&wong_first_integral(&phi), &tr);
        prop_assume!(d.is_ok());
        let d = d.unwrap();
        prop_assert!(d.zero_branch || d.max_drift <= 1e-6, "{}", d.max_drift);
    }

    #[test]
    fn geodesics_retrace_under_reversal(y in point(), v in [-1.0f64..1.0, -1.0f64..1.0]) {
        let c = wong_connection(&ScalarField::parse("y1*y2", 2).unwrap(), wide_chart());
        let r = time_reversal_residual(&c, GeodesicState::new(y, v), 1.0, 1e-3);
        prop_assume!(r.is_ok());
        prop_assert!(r.unwrap() <= 1e-8);
    }

    #[test]
    fn hamiltonian_is_conserved(y in point(), r in -1.0f64..1.0, s in 0.5f64..2.0) {
        let fd = FrameData::wong(&ScalarField::parse("y1*y2", 2).unwrap(), wide_chart()).unwrap();
        let c0 = CotangentState { y, r, s };
        let flow = fd.integrate_hamilton(&c0, 1.0, 1e-3).unwrap();
        prop_assume!(flow.halted.is_none());
        for x in &flow.states {
            prop_assert!((x[2] / x[3] - c0.hamiltonian()).abs() <= 1e-8);
        }
    }
}
