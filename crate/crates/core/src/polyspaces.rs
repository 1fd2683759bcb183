//! Orthonormal bases of the local polynomial spaces: full spaces, gradient/rot/curl ranges,
//! Koszul complements, trimmed Nedelec and Raviart-Thomas spaces and zero-mean spaces, together
//! with L2 projections and the recovery operator for direct-sum pairs.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::mesh::{Entity, Mesh};
use crate::poly::{binomial, Family, Frame, Tab};
use crate::quadrature::{entity_rule, QuadRule};

/// Relative drop tolerance for rank decisions during orthonormalization.
pub const DROP_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BasisKind {
    /// Full scalar space P^l.
    P,
    /// Full vector space (P^l)^d.
    VP,
    /// Gradient range G^l.
    G,
    /// Koszul complement of G^l.
    CG,
    /// Curl (or face vector rot) range R^l.
    R,
    /// Koszul complement of R^l.
    CR,
    /// Trimmed Nedelec space G^{l-1} + cG^l.
    NE,
    /// Trimmed Raviart-Thomas space R^{l-1} + cR^l.
    RT,
    /// Zero-mean scalar polynomials P^{0,l}.
    P0,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BasisError {
    #[error("{kind:?}^{degree} on {entity:?}: rank {rank} differs from analytic dimension {expected}")]
    RankMismatch { entity: Entity, kind: BasisKind, degree: i64, rank: usize, expected: usize },
    #[error("{kind:?} is not defined on {entity:?}")]
    Unsupported { entity: Entity, kind: BasisKind },
    #[error("{0}")]
    Mesh(#[from] crate::mesh::MeshError),
    #[error("singular stacked projection system ({0})")]
    Singular(String),
}

/// Orthonormal basis of a polynomial space attached to one mesh entity.
#[derive(Debug, Clone)]
pub struct PolyBasis {
    pub entity: Entity,
    pub kind: BasisKind,
    pub degree: i64,
    pub family: Family,
}

impl PolyBasis {
    pub fn dim(&self) -> usize {
        self.family.len()
    }

    pub fn value_dim(&self) -> usize {
        self.family.value_dim
    }

    pub fn tabulate(&self, rule: &QuadRule) -> Tab {
        self.family.tabulate(&rule.points)
    }
}

fn c(n: i64, k: usize) -> usize {
    if n < 0 {
        0
    } else {
        binomial(n as usize, k)
    }
}

/// Dimension of the space (kind, l) on an entity of intrinsic dimension d.
pub fn analytic_dim(kind: BasisKind, l: i64, d: usize) -> usize {
    let p = |l: i64| c(l + d as i64, d);
    match (kind, d) {
        (BasisKind::P, _) => p(l),
        (BasisKind::VP, _) => d * p(l),
        (BasisKind::P0, _) => p(l).saturating_sub(1),
        (BasisKind::G | BasisKind::R, 2) => p(l + 1).saturating_sub(1),
        (BasisKind::CG | BasisKind::CR, 2) => c(l + 1, 2),
        (BasisKind::G, 3) => p(l + 1).saturating_sub(1),
        (BasisKind::CG, 3) => (3 * c(l + 2, 3)).saturating_sub(c(l + 1, 3)),
        (BasisKind::R, 3) => (3 * c(l + 3, 3)).saturating_sub(c(l + 2, 3)),
        (BasisKind::CR, 3) => c(l + 2, 3),
        (BasisKind::NE, _) => analytic_dim(BasisKind::G, l - 1, d) + analytic_dim(BasisKind::CG, l, d),
        (BasisKind::RT, _) => analytic_dim(BasisKind::R, l - 1, d) + analytic_dim(BasisKind::CR, l, d),
        _ => 0,
    }
}

/// Quadrature-weighted modified Gram-Schmidt with re-orthogonalization on the generators'
/// values. With `pivoted`, the remaining generator of largest residual is taken next and the
/// process stops once residuals fall below the drop tolerance; otherwise generators are taken
/// in order and dependent ones are skipped.
pub fn orthonormalize(gen: &Family, rule: &QuadRule, pivoted: bool) -> Family {
    let n = gen.len();
    if n == 0 {
        return gen.clone();
    }
    let tab = gen.tabulate(&rule.points);
    let npts = rule.len();
    let vd = gen.value_dim;
    let sw: Vec<f64> = rule.weights.iter().map(|w| w.sqrt()).collect();
    let mut rows: Vec<DVector<f64>> = (0..n)
        .map(|i| {
            DVector::from_fn(vd * npts, |j, _| {
                let (comp, q) = (j / npts, j % npts);
                tab.vals[comp][(i, q)] * sw[q]
            })
        })
        .collect();
    let mut trans: Vec<DVector<f64>> = (0..n).map(|i| DVector::from_fn(n, |j, _| (i == j) as u8 as f64)).collect();
    let max0 = rows.iter().map(|r| r.norm()).fold(0.0, f64::max);
    if max0 == 0.0 {
        return Family { coeffs: DMatrix::zeros(0, gen.coeffs.ncols()), ..gen.clone() };
    }
    for i in 0..n {
        let s = rows[i].norm();
        if s > 1e-14 * max0 {
            rows[i] /= s;
            trans[i] /= s;
        } else {
            rows[i].fill(0.0);
            trans[i].fill(0.0);
        }
    }
    let mut accepted: Vec<usize> = Vec::new();
    let mut remaining: Vec<usize> = (0..n).collect();
    while !remaining.is_empty() {
        let pos = if pivoted {
            let mut best = 0;
            for (p, &i) in remaining.iter().enumerate() {
                if rows[i].norm() > rows[remaining[best]].norm() {
                    best = p;
                }
            }
            best
        } else {
            0
        };
        let j = remaining.remove(pos);
        for &a in &accepted {
            let cf = rows[j].dot(&rows[a]);
            let (ra, ta) = (rows[a].clone(), trans[a].clone());
            rows[j].axpy(-cf, &ra, 1.0);
            trans[j].axpy(-cf, &ta, 1.0);
        }
        let r = rows[j].norm();
        if r < DROP_TOL {
            if pivoted {
                break;
            }
            continue;
        }
        rows[j] /= r;
        trans[j] /= r;
        accepted.push(j);
        let (rj, tj) = (rows[j].clone(), trans[j].clone());
        for &i in &remaining {
            let cf = rows[i].dot(&rj);
            rows[i].axpy(-cf, &rj, 1.0);
            trans[i].axpy(-cf, &tj, 1.0);
        }
    }
    let m = DMatrix::from_fn(accepted.len(), n, |i, j| trans[accepted[i]][j]);
    gen.combine(&m)
}

/// Generators of each space in scaled monomials; None when the kind does not apply.
pub fn generators(frame: &Frame, kind: BasisKind, l: i64) -> Option<Family> {
    let d = frame.dim();
    let mono = |lo: usize, hi: i64| Family::monomials(frame, lo, hi);
    let empty = |vd: usize| Family::empty(frame.clone(), vd);
    let or_empty = |f: Family, vd: usize| if f.is_empty() { empty(vd) } else { f };
    Some(match (kind, d) {
        (BasisKind::P, _) => mono(0, l),
        (BasisKind::VP, 2 | 3) => mono(0, l).vectorize(d),
        (BasisKind::G, 2 | 3) => {
            let m = mono(1, l + 1);
            if m.is_empty() {
                empty(d)
            } else {
                m.grad()
            }
        }
        (BasisKind::R, 2) => {
            let m = mono(1, l + 1);
            if m.is_empty() {
                empty(2)
            } else {
                m.vrot()
            }
        }
        (BasisKind::R, 3) => {
            let m = mono(1, l + 1);
            if m.is_empty() {
                empty(3)
            } else {
                m.vectorize(3).curl()
            }
        }
        (BasisKind::CG, 2) => or_empty(if l >= 1 { mono(0, l - 1).koszul_perp() } else { empty(2) }, 2),
        (BasisKind::CR, 2 | 3) => or_empty(if l >= 1 { mono(0, l - 1).koszul_radial() } else { empty(d) }, d),
        (BasisKind::CG, 3) => or_empty(if l >= 1 { mono(0, l - 1).vectorize(3).koszul_cross() } else { empty(3) }, 3),
        _ => return None,
    })
}

fn rule_for(mesh: &Mesh, entity: Entity, degree: i64) -> Result<QuadRule, BasisError> {
    Ok(entity_rule(mesh, entity, 2 * degree.max(0) as usize + 2)?)
}

/// Builds the orthonormal basis of (kind, l) on an entity, orthonormalizing with `rule`, which
/// must integrate products of degree 2(l+1) exactly.
pub fn build_basis(frame: &Frame, entity: Entity, kind: BasisKind, l: i64, rule: &QuadRule) -> Result<PolyBasis, BasisError> {
    let d = frame.dim();
    let expected = analytic_dim(kind, l, d);
    let family = match kind {
        BasisKind::P => orthonormalize(&generators(frame, kind, l).unwrap(), rule, false),
        BasisKind::VP => {
            let s = build_basis(frame, entity, BasisKind::P, l, rule)?;
            if s.dim() == 0 {
                Family::empty(frame.clone(), d)
            } else {
                s.family.vectorize(d)
            }
        }
        BasisKind::P0 => {
            let s = build_basis(frame, entity, BasisKind::P, l, rule)?;
            if s.dim() <= 1 {
                Family::empty(frame.clone(), 1)
            } else {
                let tab = s.family.tabulate(&rule.points);
                let vol = rule.measure();
                let means: Vec<f64> =
                    (0..s.dim()).map(|i| tab.vals[0].row(i).iter().zip(&rule.weights).map(|(v, w)| v * w).sum::<f64>() / vol).collect();
                let one = Family::monomials(frame, 0, 0).raise(s.family.degree);
                let rows: Vec<usize> = (1..s.dim()).collect();
                let mut gen = s.family.select(&rows);
                for (r, &i) in rows.iter().enumerate() {
                    let m = means[i];
                    for j in 0..gen.coeffs.ncols() {
                        gen.coeffs[(r, j)] -= m * one.coeffs[(0, j)];
                    }
                }
                orthonormalize(&gen, rule, true)
            }
        }
        BasisKind::NE | BasisKind::RT => {
            let (a, b) = if kind == BasisKind::NE { (BasisKind::G, BasisKind::CG) } else { (BasisKind::R, BasisKind::CR) };
            let s = build_basis(frame, entity, a, l - 1, rule)?;
            let sc = build_basis(frame, entity, b, l, rule)?;
            Family::stack(&[&s.family, &sc.family])
        }
        _ => {
            let gen = generators(frame, kind, l).ok_or(BasisError::Unsupported { entity, kind })?;
            orthonormalize(&gen, rule, true)
        }
    };
    if family.len() != expected {
        return Err(BasisError::RankMismatch { entity, kind, degree: l, rank: family.len(), expected });
    }
    Ok(PolyBasis { entity, kind, degree: l, family })
}

/// Orthonormal basis of P^l on an edge, face or cell (empty for l = -1).
pub fn scalar_basis(mesh: &Mesh, entity: Entity, l: i64) -> Result<PolyBasis, BasisError> {
    let rule = rule_for(mesh, entity, l)?;
    build_basis(&Frame::of(mesh, entity), entity, BasisKind::P, l, &rule)
}

/// Orthonormal basis of a structured subspace (G, cG, R, cR, NE, RT, P0, VP) on a face or cell.
pub fn subspace_basis(mesh: &Mesh, entity: Entity, kind: BasisKind, l: i64) -> Result<PolyBasis, BasisError> {
    if !matches!(entity, Entity::Face(_) | Entity::Cell(_)) && kind != BasisKind::P && kind != BasisKind::P0 {
        return Err(BasisError::Unsupported { entity, kind });
    }
    let rule = rule_for(mesh, entity, l + 1)?;
    build_basis(&Frame::of(mesh, entity), entity, kind, l, &rule)
}

/// L2 projection coefficients of sampled values onto an orthonormal basis. `values` holds the
/// field at the rule points; face bases accept 3D samples and use their tangential part.
pub fn l2_project(basis: &PolyBasis, rule: &QuadRule, values: &Tab) -> DVector<f64> {
    let tab = basis.tabulate(rule);
    let values = if values.value_dim() == 3 && basis.value_dim() == 2 {
        values.to_plane(&basis.family.frame.axes)
    } else {
        values.clone()
    };
    let g = tab.gram(&values, &rule.weights);
    DVector::from_column_slice(g.column(0).as_slice())
}

/// L2 projection of a pointwise field given as a closure returning value_dim (or 3 for face
/// tangent projections) components.
pub fn l2_project_fn(basis: &PolyBasis, rule: &QuadRule, f: impl Fn(&crate::mesh::Point) -> Vec<f64>) -> DVector<f64> {
    let samples: Vec<Vec<f64>> = rule.points.iter().map(&f).collect();
    let vd = samples.first().map_or(basis.value_dim(), |s| s.len());
    l2_project(basis, rule, &Tab::from_samples(&samples, vd))
}

/// Matrix of pi_target restricted to the span of `source`: entry (i,j) = (target_i, source_j).
pub fn projection_matrix(target: &PolyBasis, source: &Family, rule: &QuadRule) -> DMatrix<f64> {
    target.tabulate(rule).gram(&source.tabulate(&rule.points), &rule.weights)
}

/// Unique a in vP^l with pi_S a = b and pi_Sc a = c, given by its coefficients in the orthonormal
/// basis `full` of vP^l.
pub fn recovery(
    s: &PolyBasis,
    sc: &PolyBasis,
    full: &PolyBasis,
    rule: &QuadRule,
    b: &DVector<f64>,
    c: &DVector<f64>,
) -> Result<DVector<f64>, BasisError> {
    let n = full.dim();
    if s.dim() + sc.dim() != n {
        return Err(BasisError::Singular(format!("dimensions {} + {} != {}", s.dim(), sc.dim(), n)));
    }
    let mut m = DMatrix::zeros(n, n);
    m.view_mut((0, 0), (s.dim(), n)).copy_from(&projection_matrix(s, &full.family, rule));
    m.view_mut((s.dim(), 0), (sc.dim(), n)).copy_from(&projection_matrix(sc, &full.family, rule));
    let mut rhs = DVector::zeros(n);
    rhs.rows_mut(0, s.dim()).copy_from(b);
    rhs.rows_mut(s.dim(), sc.dim()).copy_from(c);
    m.lu().solve(&rhs).ok_or_else(|| BasisError::Singular("stacked projections".into()))
}

/// Spectral norm of pi_S restricted to S^c, which is strictly below one for a direct sum.
pub fn projection_coupling_norm(s: &PolyBasis, sc: &PolyBasis, rule: &QuadRule) -> f64 {
    if s.dim() == 0 || sc.dim() == 0 {
        return 0.0;
    }
    projection_matrix(s, &sc.family, rule).singular_values().max()
}
