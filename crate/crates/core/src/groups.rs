//! Closed-form group laws for H(3), G₄ and Ḡ₄.
//!
//! Coordinates of the second kind `(p1, …, pr)` denote
//! `exp(p1 a1) exp(p2 a2) ⋯ exp(pr ar)`; coordinates of the first kind
//! denote `exp(Σ p_α a_α)`. All three groups are simply connected and
//! nilpotent, so both charts are global.

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;

use crate::algebra::{unit, AlgebraElement, LieAlgebra};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModelKind {
    H3,
    G4,
    G4Bar,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::H3 => "h3",
            ModelKind::G4 => "g4",
            ModelKind::G4Bar => "g4bar",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        match name {
            "h3" => Ok(ModelKind::H3),
            "g4" => Ok(ModelKind::G4),
            "g4bar" => Ok(ModelKind::G4Bar),
            other => Err(Error::invalid(format!("unknown group model `{other}`"))),
        }
    }

    pub fn dim(self) -> usize {
        match self {
            ModelKind::H3 => 3,
            ModelKind::G4 | ModelKind::G4Bar => 4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Chart {
    FirstKind,
    SecondKind,
}

impl Chart {
    pub fn name(self) -> &'static str {
        match self {
            Chart::FirstKind => "first",
            Chart::SecondKind => "second",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        match name {
            "first" | "first-kind" => Ok(Chart::FirstKind),
            "second" | "second-kind" => Ok(Chart::SecondKind),
            other => Err(Error::invalid(format!("unknown chart `{other}`"))),
        }
    }
}

impl fmt::Display for Chart {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroupElement {
    pub kind: ModelKind,
    pub chart: Chart,
    pub coords: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct GroupModel {
    kind: ModelKind,
    algebra: Arc<LieAlgebra>,
}

impl GroupModel {
    pub fn new(kind: ModelKind) -> Self {
        let algebra = match kind {
            ModelKind::H3 => LieAlgebra::h3(),
            ModelKind::G4 => LieAlgebra::g4(),
            ModelKind::G4Bar => LieAlgebra::g4bar(),
        };
        Self {
            kind,
            algebra: Arc::new(algebra),
        }
    }

    pub fn by_name(name: &str) -> Result<Self> {
        Ok(Self::new(ModelKind::from_name(name)?))
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn name(&self) -> &'static str {
        self.kind.name()
    }

    pub fn algebra(&self) -> &Arc<LieAlgebra> {
        &self.algebra
    }

    pub fn dim(&self) -> usize {
        self.kind.dim()
    }

    pub fn element(&self, chart: Chart, coords: Vec<f64>) -> Result<GroupElement> {
        if coords.len() != self.dim() {
            return Err(Error::invalid(format!(
                "{} coordinates need {} entries, got {}",
                self.name(),
                self.dim(),
                coords.len()
            )));
        }
        Ok(GroupElement {
            kind: self.kind,
            chart,
            coords,
        })
    }

    pub fn identity(&self, chart: Chart) -> GroupElement {
        GroupElement {
            kind: self.kind,
            chart,
            coords: vec![0.0; self.dim()],
        }
    }

    fn check(&self, p: &GroupElement) -> Result<()> {
        if p.kind != self.kind || p.coords.len() != self.dim() {
            return Err(Error::invalid(format!(
                "element of {} used with model {}",
                p.kind.name(),
                self.name()
            )));
        }
        Ok(())
    }

    pub fn compose(&self, p: &GroupElement, q: &GroupElement) -> Result<GroupElement> {
        self.check(p)?;
        self.check(q)?;
        if p.chart != q.chart {
            return Err(Error::invalid(format!(
                "cannot compose {}-kind and {}-kind coordinates",
                p.chart, q.chart
            )));
        }
        Ok(GroupElement {
            coords: compose_coords(self.kind, p.chart, &p.coords, &q.coords),
            ..p.clone()
        })
    }

    pub fn inverse(&self, p: &GroupElement) -> Result<GroupElement> {
        self.check(p)?;
        Ok(GroupElement {
            coords: inverse_coords(self.kind, p.chart, &p.coords),
            ..p.clone()
        })
    }

    pub fn convert(&self, p: &GroupElement, target: Chart) -> Result<GroupElement> {
        self.check(p)?;
        Ok(GroupElement {
            coords: convert_coords(self.kind, p.chart, target, &p.coords),
            chart: target,
            kind: self.kind,
        })
    }

    /// `exp(s a_β)`, which has coordinates `s e_β` in both charts.
    pub fn one_parameter(&self, chart: Chart, beta: usize, s: f64) -> Result<GroupElement> {
        if beta >= self.dim() {
            return Err(Error::invalid(format!("no basis element a{}", beta + 1)));
        }
        let mut coords = vec![0.0; self.dim()];
        coords[beta] = s;
        self.element(chart, coords)
    }

    /// `Π_k exp(params[k] a_{ordering[k]})` in the given chart.
    pub fn product_of_exponentials(&self, chart: Chart, ordering: &[usize], params: &[f64]) -> Result<GroupElement> {
        if ordering.len() != params.len() {
            return Err(Error::invalid("ordering and parameters differ in length"));
        }
        let mut g = self.identity(chart);
        for (&beta, &s) in ordering.iter().zip(params) {
            g = self.compose(&g, &self.one_parameter(chart, beta, s)?)?;
        }
        Ok(g)
    }

    /// The element `Π exp(-v_α a_α)` reached by a Wei–Norman solution.
    pub fn from_wn(&self, chart: Chart, ordering: &[usize], v: &[f64]) -> Result<GroupElement> {
        if v.len() != self.dim() {
            return Err(Error::invalid("Wei-Norman coordinates have the wrong length"));
        }
        let params: Vec<f64> = ordering.iter().map(|&o| -v[o]).collect();
        self.product_of_exponentials(chart, ordering, &params)
    }

    /// Matrix of `Ad(g)` on basis coefficients: `Ad(g) a_β = Σ_γ M[γ][β] a_γ`.
    pub fn adjoint(&self, p: &GroupElement) -> Result<DMatrix<f64>> {
        self.check(p)?;
        let x = &p.coords;
        match (self.kind, p.chart) {
            (ModelKind::G4, Chart::FirstKind) => {
                let (a, b, c) = (x[0], x[1], x[2]);
                Ok(DMatrix::from_row_slice(
                    4,
                    4,
                    &[
                        1.0,
                        0.0,
                        0.0,
                        0.0,
                        0.0,
                        1.0,
                        0.0,
                        0.0,
                        -b,
                        a,
                        1.0,
                        0.0,
                        -b * (a + b) / 2.0 - c,
                        a * (a + b) / 2.0 - c,
                        a + b,
                        1.0,
                    ],
                ))
            }
            (_, Chart::FirstKind) => self.algebra.exp_ad(x, 1.0),
            (_, Chart::SecondKind) => self.adjoint_second_kind(x),
        }
    }

    fn adjoint_second_kind(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        let r = self.dim();
        let mut m = DMatrix::identity(r, r);
        for (alpha, &s) in x.iter().enumerate() {
            if s != 0.0 {
                m *= self.algebra.exp_ad(&unit(r, alpha), s)?;
            }
        }
        Ok(m)
    }

    /// Right-trivialised velocity `ġ g⁻¹` for `g = p`, `ġ = pdot`.
    pub fn right_deriv(&self, p: &GroupElement, pdot: &[f64]) -> Result<AlgebraElement> {
        self.check(p)?;
        if pdot.len() != self.dim() {
            return Err(Error::invalid("velocity has the wrong number of coordinates"));
        }
        let coeffs = match p.chart {
            Chart::FirstKind => right_deriv_first(self.kind, &p.coords, pdot),
            Chart::SecondKind => {
                let r = self.dim();
                let mut out = vec![0.0; r];
                let mut prefix = DMatrix::<f64>::identity(r, r);
                for alpha in 0..r {
                    for (o, m) in out.iter_mut().zip(prefix.column(alpha).iter()) {
                        *o += pdot[alpha] * m;
                    }
                    prefix *= self.algebra.exp_ad(&unit(r, alpha), p.coords[alpha])?;
                }
                out
            }
        };
        self.algebra.element(coeffs)
    }
}

fn compose_coords(kind: ModelKind, chart: Chart, p: &[f64], q: &[f64]) -> Vec<f64> {
    let (a, b, c) = (p[0], p[1], p[2]);
    let (a2, b2, c2) = (q[0], q[1], q[2]);
    match (kind, chart) {
        (ModelKind::H3, Chart::FirstKind) => vec![a + a2, b + b2, c + c2 + (a * b2 - b * a2) / 2.0],
        (ModelKind::H3, Chart::SecondKind) => vec![a + a2, b + b2, c + c2 - b * a2],
        (ModelKind::G4, Chart::SecondKind) => {
            let (d, d2) = (p[3], q[3]);
            vec![
                a + a2,
                b + b2,
                c + c2 - b * a2,
                d + d2 - c * (a2 + b2) + b * a2 * (b + 2.0 * b2 + a2) / 2.0,
            ]
        }
        (ModelKind::G4, Chart::FirstKind) => {
            let (d, d2) = (p[3], q[3]);
            let w = a * b2 - b * a2;
            vec![
                a + a2,
                b + b2,
                c + c2 + w / 2.0,
                d + d2 + (a * c2 - c * a2) / 2.0 + (b * c2 - c * b2) / 2.0 + w * (a - a2 + b - b2) / 12.0,
            ]
        }
        (ModelKind::G4Bar, Chart::SecondKind) => {
            let (d, d2) = (p[3], q[3]);
            vec![a + a2, b + b2, c + c2 - b * a2, d + d2 - c * a2 + b * a2 * a2 / 2.0]
        }
        (ModelKind::G4Bar, Chart::FirstKind) => {
            let (d, d2) = (p[3], q[3]);
            let w = a * b2 - b * a2;
            vec![
                a + a2,
                b + b2,
                c + c2 + w / 2.0,
                d + d2 + (a * c2 - c * a2) / 2.0 + w * (a - a2) / 12.0,
            ]
        }
    }
}

fn inverse_coords(kind: ModelKind, chart: Chart, p: &[f64]) -> Vec<f64> {
    if chart == Chart::FirstKind {
        return p.iter().map(|x| -x).collect();
    }
    let (a, b, c) = (p[0], p[1], p[2]);
    match kind {
        ModelKind::H3 => vec![-a, -b, -a * b - c],
        ModelKind::G4 => {
            let d = p[3];
            vec![
                -a,
                -b,
                -a * b - c,
                -a * a * b / 2.0 - a * b * b / 2.0 - a * c - b * c - d,
            ]
        }
        ModelKind::G4Bar => {
            let d = p[3];
            vec![-a, -b, -a * b - c, -a * a * b / 2.0 - a * c - d]
        }
    }
}

fn convert_coords(kind: ModelKind, from: Chart, to: Chart, p: &[f64]) -> Vec<f64> {
    if from == to {
        return p.to_vec();
    }
    let (a, b, c) = (p[0], p[1], p[2]);
    let to_first = from == Chart::SecondKind;
    match kind {
        ModelKind::H3 => {
            let s = if to_first { 0.5 } else { -0.5 };
            vec![a, b, c + s * a * b]
        }
        ModelKind::G4 => {
            let d = p[3];
            if to_first {
                vec![
                    a,
                    b,
                    c + a * b / 2.0,
                    d + a * a * b / 12.0 - a * b * b / 12.0 + a * c / 2.0 + b * c / 2.0,
                ]
            } else {
                vec![
                    a,
                    b,
                    c - a * b / 2.0,
                    d + a * a * b / 6.0 + a * b * b / 3.0 - a * c / 2.0 - b * c / 2.0,
                ]
            }
        }
        ModelKind::G4Bar => {
            let d = p[3];
            if to_first {
                vec![a, b, c + a * b / 2.0, d + a * a * b / 12.0 + a * c / 2.0]
            } else {
                vec![a, b, c - a * b / 2.0, d + a * a * b / 6.0 - a * c / 2.0]
            }
        }
    }
}

fn right_deriv_first(kind: ModelKind, p: &[f64], pd: &[f64]) -> Vec<f64> {
    let (a, b, c) = (p[0], p[1], p[2]);
    let (ad, bd, cd) = (pd[0], pd[1], pd[2]);
    let third = cd - (b * ad - a * bd) / 2.0;
    match kind {
        ModelKind::H3 => vec![ad, bd, third],
        ModelKind::G4 => vec![
            ad,
            bd,
            third,
            pd[3] - (a * b + b * b + 3.0 * c) * ad / 6.0 + (a * a + a * b - 3.0 * c) * bd / 6.0 + (a + b) * cd / 2.0,
        ],
        ModelKind::G4Bar => vec![
            ad,
            bd,
            third,
            pd[3] - (a * b + 3.0 * c) * ad / 6.0 + a * a * bd / 6.0 + a * cd / 2.0,
        ],
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const KINDS: [ModelKind; 3] = [ModelKind::H3, ModelKind::G4, ModelKind::G4Bar];
    const CHARTS: [Chart; 2] = [Chart::FirstKind, Chart::SecondKind];

    /// Upper-triangular matrices realising each algebra, checked to be a
    /// representation before use.
    fn realization(kind: ModelKind) -> Vec<DMatrix<f64>> {
        let e = |n: usize, i: usize, j: usize| {
            let mut m = DMatrix::zeros(n, n);
            m[(i, j)] = 1.0;
            m
        };
        match kind {
            ModelKind::H3 => vec![e(3, 0, 1), e(3, 1, 2), e(3, 0, 2)],
            ModelKind::G4Bar | ModelKind::G4 => {
                let a1 = e(4, 0, 1) + e(4, 1, 2) + e(4, 2, 3);
                let a2 = if kind == ModelKind::G4 {
                    e(4, 2, 3) + &a1
                } else {
                    e(4, 2, 3)
                };
                vec![a1, a2, e(4, 1, 3), e(4, 0, 3)]
            }
        }
    }

    fn combo(basis: &[DMatrix<f64>], x: &[f64]) -> DMatrix<f64> {
        basis
            .iter()
            .zip(x)
            .fold(DMatrix::zeros(basis[0].nrows(), basis[0].ncols()), |acc, (m, &c)| {
                acc + m * c
            })
    }

    fn mexp(x: &DMatrix<f64>) -> DMatrix<f64> {
        let n = x.nrows();
        let mut sum = DMatrix::identity(n, n);
        let mut term = DMatrix::identity(n, n);
        for k in 1..=n {
            term = &term * x / k as f64;
            sum += &term;
        }
        sum
    }

    fn to_matrix(kind: ModelKind, chart: Chart, p: &[f64]) -> DMatrix<f64> {
        let basis = realization(kind);
        match chart {
            Chart::FirstKind => mexp(&combo(&basis, p)),
            Chart::SecondKind => basis
                .iter()
                .zip(p)
                .fold(DMatrix::identity(basis[0].nrows(), basis[0].nrows()), |acc, (m, &c)| {
                    acc * mexp(&(m * c))
                }),
        }
    }

    fn random_coords(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
        (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect()
    }

    fn close(x: &[f64], y: &[f64], tol: f64) -> bool {
        x.iter().zip(y).all(|(a, b)| (a - b).abs() <= tol)
    }

    #[test]
    fn realizations_are_representations() {
        for kind in KINDS {
            let alg = GroupModel::new(kind).algebra().clone();
            let basis = realization(kind);
            let r = basis.len();
            for i in 0..r {
                for j in 0..r {
                    let lhs = &basis[i] * &basis[j] - &basis[j] * &basis[i];
                    let coeffs = alg.bracket_coeffs(&unit(r, i), &unit(r, j)).unwrap();
                    assert!((lhs - combo(&basis, &coeffs)).amax() < 1e-15, "{kind:?} [{i},{j}]");
                }
            }
        }
    }

    #[test]
    fn laws_match_matrix_products() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for kind in KINDS {
            let m = GroupModel::new(kind);
            for chart in CHARTS {
                for _ in 0..200 {
                    let p = random_coords(&mut rng, m.dim());
                    let q = random_coords(&mut rng, m.dim());
                    let pq = compose_coords(kind, chart, &p, &q);
                    let lhs = to_matrix(kind, chart, &pq);
                    let rhs = to_matrix(kind, chart, &p) * to_matrix(kind, chart, &q);
                    assert!((lhs - rhs).amax() < 1e-11, "{kind:?} {chart:?}");
                    let conv = convert_coords(kind, chart, other(chart), &p);
                    assert!((to_matrix(kind, other(chart), &conv) - to_matrix(kind, chart, &p)).amax() < 1e-12);
                }
            }
        }
    }

    fn other(c: Chart) -> Chart {
        match c {
            Chart::FirstKind => Chart::SecondKind,
            Chart::SecondKind => Chart::FirstKind,
        }
    }

    #[test]
    fn group_axioms() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for kind in KINDS {
            let m = GroupModel::new(kind);
            for chart in CHARTS {
                let e = m.identity(chart);
                for _ in 0..1000 {
                    let p = m.element(chart, random_coords(&mut rng, m.dim())).unwrap();
                    let q = m.element(chart, random_coords(&mut rng, m.dim())).unwrap();
                    let s = m.element(chart, random_coords(&mut rng, m.dim())).unwrap();
                    let l = m.compose(&m.compose(&p, &q).unwrap(), &s).unwrap();
                    let r = m.compose(&p, &m.compose(&q, &s).unwrap()).unwrap();
                    assert!(close(&l.coords, &r.coords, 1e-12));
                    assert_eq!(m.compose(&e, &p).unwrap(), p);
                    assert_eq!(m.compose(&p, &e).unwrap(), p);
                    let inv = m.inverse(&p).unwrap();
                    assert!(close(&m.compose(&p, &inv).unwrap().coords, &e.coords, 1e-12));
                    assert!(close(&m.compose(&inv, &p).unwrap().coords, &e.coords, 1e-12));
                    let back = m.convert(&m.convert(&p, other(chart)).unwrap(), chart).unwrap();
                    assert!(close(&back.coords, &p.coords, 1e-12));
                }
            }
        }
    }

    #[test]
    fn printed_examples() {
        let m = GroupModel::new(ModelKind::G4);
        let x = m.element(Chart::SecondKind, vec![1.0, 0.0, 0.0, 0.0]).unwrap();
        let y = m.element(Chart::SecondKind, vec![0.0, 1.0, 0.0, 0.0]).unwrap();
        assert_eq!(m.compose(&x, &y).unwrap().coords, vec![1.0, 1.0, 0.0, 0.0]);
        assert_eq!(m.compose(&y, &x).unwrap().coords, vec![1.0, 1.0, -1.0, 1.0]);
        let first = m.element(Chart::FirstKind, vec![1.0, 1.0, 0.0, 0.0]).unwrap();
        let ad = m.adjoint(&first).unwrap();
        assert_eq!(ad.row(3).iter().copied().collect::<Vec<_>>(), vec![-1.0, 1.0, 2.0, 1.0]);
        let p = m.element(Chart::FirstKind, vec![0.4, -1.1, 0.0, 0.0]).unwrap();
        let rd = m.right_deriv(&p, &[0.0, 0.0, 1.0, 0.0]).unwrap();
        assert!(close(rd.coeffs(), &[0.0, 0.0, 1.0, (0.4 - 1.1) / 2.0], 1e-15));
        assert!(m.compose(&x, &first).is_err());
        let h = GroupModel::new(ModelKind::H3).identity(Chart::FirstKind);
        assert!(m.compose(&h, &h).is_err());
    }

    /// Second-kind `(a, b, 0, 0)` against the first-kind product of the two
    /// one-parameter subgroups.
    #[test]
    fn conversion_of_two_factor_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for kind in [ModelKind::G4, ModelKind::G4Bar] {
            let m = GroupModel::new(kind);
            for _ in 0..50 {
                let (a, b) = (rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
                let p = m.element(Chart::SecondKind, vec![a, b, 0.0, 0.0]).unwrap();
                let oracle = m
                    .compose(
                        &m.one_parameter(Chart::FirstKind, 0, a).unwrap(),
                        &m.one_parameter(Chart::FirstKind, 1, b).unwrap(),
                    )
                    .unwrap();
                assert!(close(
                    &m.convert(&p, Chart::FirstKind).unwrap().coords,
                    &oracle.coords,
                    1e-12
                ));
            }
            let single = m.element(Chart::SecondKind, vec![0.7, 0.0, 0.0, 0.0]).unwrap();
            assert_eq!(m.convert(&single, Chart::FirstKind).unwrap().coords, single.coords);
        }
    }

    #[test]
    fn adjoint_is_a_homomorphism() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        for kind in KINDS {
            let m = GroupModel::new(kind);
            for chart in CHARTS {
                assert_eq!(
                    m.adjoint(&m.identity(chart)).unwrap(),
                    DMatrix::identity(m.dim(), m.dim())
                );
                for _ in 0..300 {
                    let p = m.element(chart, random_coords(&mut rng, m.dim())).unwrap();
                    let q = m.element(chart, random_coords(&mut rng, m.dim())).unwrap();
                    let lhs = m.adjoint(&m.compose(&p, &q).unwrap()).unwrap();
                    let rhs = m.adjoint(&p).unwrap() * m.adjoint(&q).unwrap();
                    assert!((lhs - rhs).amax() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn adjoint_along_one_parameter_subgroups() {
        for kind in KINDS {
            let m = GroupModel::new(kind);
            for chart in CHARTS {
                for beta in 0..m.dim() {
                    for s in [-1.5, 0.3, 2.0] {
                        let g = m.one_parameter(chart, beta, s).unwrap();
                        let expected = m.algebra().exp_ad(&unit(m.dim(), beta), s).unwrap();
                        assert!((m.adjoint(&g).unwrap() - expected).amax() < 1e-10);
                    }
                }
            }
        }
    }

    /// The printed G₄ matrix against `exp(ad X)` and the matrix realization.
    #[test]
    fn printed_adjoint_matches_generic_routes() {
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        let m = GroupModel::new(ModelKind::G4);
        let basis = realization(ModelKind::G4);
        for _ in 0..100 {
            let p = m.element(Chart::FirstKind, random_coords(&mut rng, 4)).unwrap();
            let printed = m.adjoint(&p).unwrap();
            let generic = m.algebra().exp_ad(&p.coords, 1.0).unwrap();
            assert!((&printed - generic).amax() < 1e-12);
            let g = to_matrix(ModelKind::G4, Chart::FirstKind, &p.coords);
            let ginv = g.clone().try_inverse().unwrap();
            for beta in 0..4 {
                let conj = &g * &basis[beta] * &ginv;
                let col: Vec<f64> = printed.column(beta).iter().copied().collect();
                assert!((conj - combo(&basis, &col)).amax() < 1e-11);
            }
        }
    }

    /// `ġ g⁻¹` from the closed forms against `Σ ad_X^k Ẋ/(k+1)!` for the
    /// first kind and against matrix differentiation for both charts.
    #[test]
    fn right_derivative_routes_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(16);
        for kind in KINDS {
            let m = GroupModel::new(kind);
            let n = m.dim();
            let basis = realization(kind);
            for _ in 0..50 {
                let p = random_coords(&mut rng, n);
                let pd = random_coords(&mut rng, n);
                let first = m.element(Chart::FirstKind, p.clone()).unwrap();
                let closed = m.right_deriv(&first, &pd).unwrap();
                let ad = m.algebra().ad_matrix(&p).unwrap();
                let mut series = nalgebra::DVector::from_column_slice(&pd);
                let mut term = series.clone();
                for k in 1..=n {
                    term = &ad * term / (k as f64 + 1.0);
                    series += &term;
                }
                assert!(close(closed.coeffs(), series.as_slice(), 1e-12));
                for chart in CHARTS {
                    let g = m.element(chart, p.clone()).unwrap();
                    let rd = m.right_deriv(&g, &pd).unwrap();
                    let h = 1e-5;
                    let shift = |s: f64| {
                        let x: Vec<f64> = p.iter().zip(&pd).map(|(a, b)| a + s * b).collect();
                        to_matrix(kind, chart, &x)
                    };
                    let gdot = (shift(h) - shift(-h)) / (2.0 * h);
                    let lhs = gdot * to_matrix(kind, chart, &p).try_inverse().unwrap();
                    assert!((lhs - combo(&basis, rd.coeffs())).amax() < 1e-7);
                }
            }
        }
    }

    #[test]
    fn right_derivative_is_right_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for kind in KINDS {
            let m = GroupModel::new(kind);
            let n = m.dim();
            for chart in CHARTS {
                for _ in 0..20 {
                    let p0 = random_coords(&mut rng, n);
                    let pd = random_coords(&mut rng, n);
                    let q = m.element(chart, random_coords(&mut rng, n)).unwrap();
                    let curve = |s: f64| {
                        let x: Vec<f64> = p0.iter().zip(&pd).map(|(a, b)| a + s * b).collect();
                        m.element(chart, x).unwrap()
                    };
                    let h = 1e-5;
                    let plus = m.compose(&curve(h), &q).unwrap();
                    let minus = m.compose(&curve(-h), &q).unwrap();
                    let vel: Vec<f64> = plus
                        .coords
                        .iter()
                        .zip(&minus.coords)
                        .map(|(a, b)| (a - b) / (2.0 * h))
                        .collect();
                    let base = m.compose(&curve(0.0), &q).unwrap();
                    let translated = m.right_deriv(&base, &vel).unwrap();
                    let direct = m.right_deriv(&curve(0.0), &pd).unwrap();
                    assert!(close(translated.coeffs(), direct.coeffs(), 1e-6));
                }
            }
        }
    }

    #[test]
    fn right_derivative_at_identity_is_velocity() {
        let m = GroupModel::new(ModelKind::G4Bar);
        for chart in CHARTS {
            let rd = m.right_deriv(&m.identity(chart), &[0.3, -0.2, 1.0, 4.0]).unwrap();
            assert_eq!(rd.coeffs(), &[0.3, -0.2, 1.0, 4.0]);
        }
    }

    #[test]
    fn names_round_trip() {
        for kind in KINDS {
            assert_eq!(ModelKind::from_name(kind.name()).unwrap(), kind);
        }
        assert!(GroupModel::by_name("so3").is_err());
        assert_eq!(Chart::from_name("second").unwrap(), Chart::SecondKind);
    }
}
