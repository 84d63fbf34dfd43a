//! Smooth connectivity model: sigmoid edge weights, weighted Laplacian and
//! the reduced Laplacian `M(x) = P^T L(x) P` whose determinant is positive
//! exactly when the weighted graph is connected.

use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::SensorConfiguration;

/// Condition number above which the cofactor matrix is no longer formed as `det * M^{-1}`.
pub const COFACTOR_COND_LIMIT: f64 = 1e12;

/// Parameters of the sigmoid edge weight `a_ij = sigma_w(epsilon - |x_i - x_j|)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EdgeWeightParams {
    /// Steepness of the weight decay.
    pub w: f64,
    /// Transmission range.
    pub epsilon: f64,
}

impl EdgeWeightParams {
    pub fn new(w: f64, epsilon: f64) -> Result<Self> {
        let p = Self { w, epsilon };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.w > 0.0 && self.w.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "w must be positive (got {})",
                self.w
            )));
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "epsilon must be positive (got {})",
                self.epsilon
            )));
        }
        Ok(())
    }

    /// Edge weight at pairwise distance `dist`.
    pub fn weight(&self, dist: f64) -> f64 {
        sigmoid(self.w * (self.epsilon - dist))
    }

    /// Derivative of the edge weight with respect to the distance.
    pub fn weight_slope(&self, dist: f64) -> f64 {
        let s = self.weight(dist);
        -self.w * s * (1.0 - s)
    }

    /// Largest distance whose weight is at least `threshold`, i.e.
    /// `epsilon + ln(1/threshold - 1) / w`; equals `epsilon` at 0.5.
    pub fn threshold_distance(&self, threshold: f64) -> Result<f64> {
        if !(threshold > 0.0 && threshold < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "edge threshold must lie in (0, 1) (got {threshold})"
            )));
        }
        Ok(self.epsilon + (1.0 / threshold - 1.0).ln() / self.w)
    }
}

/// Logistic function, branching on the sign so neither branch overflows.
pub fn sigmoid(y: f64) -> f64 {
    if y >= 0.0 {
        1.0 / (1.0 + (-y).exp())
    } else {
        let e = y.exp();
        e / (1.0 + e)
    }
}

pub fn adjacency(x: &SensorConfiguration, params: &EdgeWeightParams) -> DMatrix<f64> {
    let n = x.n();
    let mut a = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i + 1..n {
            let v = params.weight(x.distance(i, j));
            a[(i, j)] = v;
            a[(j, i)] = v;
        }
    }
    a
}

/// `L = diag(A 1) - A`.
pub fn laplacian(x: &SensorConfiguration, params: &EdgeWeightParams) -> DMatrix<f64> {
    let a = adjacency(x, params);
    laplacian_from_adjacency(&a)
}

fn laplacian_from_adjacency(a: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    let mut l = -a.clone();
    for i in 0..n {
        l[(i, i)] = a.row(i).sum();
    }
    l
}

fn projection_cache() -> &'static Mutex<HashMap<usize, DMatrix<f64>>> {
    static CACHE: OnceLock<Mutex<HashMap<usize, DMatrix<f64>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Orthonormal basis of the complement of the all-ones vector, as the columns of an
/// `n x (n-1)` matrix.
///
/// Built by Gram-Schmidt over the columns of `I - 11^T/n` in index order; the last
/// column is the dependent one and is dropped. Results are cached per `n`.
pub fn projection_matrix(n: usize) -> Result<DMatrix<f64>> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!(
            "projection matrix needs n >= 2 (got {n})"
        )));
    }
    if let Some(p) = projection_cache().lock().unwrap().get(&n) {
        return Ok(p.clone());
    }
    let p = gram_schmidt_complement(n);
    projection_cache().lock().unwrap().insert(n, p.clone());
    Ok(p)
}

fn gram_schmidt_complement(n: usize) -> DMatrix<f64> {
    let inv_n = 1.0 / n as f64;
    let mut p = DMatrix::zeros(n, n - 1);
    for j in 0..n - 1 {
        let mut v = nalgebra::DVector::from_element(n, -inv_n);
        v[j] += 1.0;
        // two passes of modified Gram-Schmidt
        for _ in 0..2 {
            for c in 0..j {
                let col = p.column(c);
                let dot = col.dot(&v);
                v.axpy(-dot, &col, 1.0);
            }
        }
        let norm = v.norm();
        p.set_column(j, &(v / norm));
    }
    p
}

/// `M = P^T L P` together with its determinant.
#[derive(Debug, Clone)]
pub struct ReducedLaplacian {
    pub m: DMatrix<f64>,
    pub det: f64,
    pub p: DMatrix<f64>,
}

impl ReducedLaplacian {
    /// Eigenvalues of `M` in ascending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        sorted_eigenvalues(&self.m)
    }
}

fn sorted_eigenvalues(m: &DMatrix<f64>) -> Vec<f64> {
    if m.nrows() == 0 {
        return Vec::new();
    }
    let mut ev: Vec<f64> = SymmetricEigen::new(m.clone())
        .eigenvalues
        .iter()
        .copied()
        .collect();
    ev.sort_by(f64::total_cmp);
    ev
}

/// Reduced Laplacian; for a single sensor `M` is empty and its determinant is 1.
pub fn reduced_laplacian(x: &SensorConfiguration, params: &EdgeWeightParams) -> ReducedLaplacian {
    let n = x.n();
    if n < 2 {
        return ReducedLaplacian {
            m: DMatrix::zeros(0, 0),
            det: 1.0,
            p: DMatrix::zeros(n, 0),
        };
    }
    let p = projection_matrix(n).expect("n >= 2");
    let l = laplacian(x, params);
    let m = p.transpose() * &l * &p;
    let m = (&m + m.transpose()) * 0.5;
    let det = m.clone().lu().determinant();
    ReducedLaplacian { m, det, p }
}

/// Convenience wrapper for `det(P^T L(x) P)`.
pub fn det_m(x: &SensorConfiguration, params: &EdgeWeightParams) -> f64 {
    reduced_laplacian(x, params).det
}

fn check_distinct_from(x: &SensorConfiguration, l: usize) -> Result<()> {
    for j in 0..x.n() {
        if j != l && x.position(j) == x.position(l) {
            return Err(Error::SingularConfiguration(l.min(j), l.max(j)));
        }
    }
    Ok(())
}

/// `d a_lj / d x_l^(k)`.
fn weight_partial(
    x: &SensorConfiguration,
    params: &EdgeWeightParams,
    l: usize,
    j: usize,
    k: usize,
) -> f64 {
    let dist = x.distance(l, j);
    params.weight_slope(dist) * (x.position(l)[k] - x.position(j)[k]) / dist
}

/// Elementwise derivative of `L(x)` with respect to coordinate `k` of sensor `l`.
pub fn partial_laplacian(
    x: &SensorConfiguration,
    params: &EdgeWeightParams,
    l: usize,
    k: usize,
) -> Result<DMatrix<f64>> {
    let n = x.n();
    if l >= n || k >= x.d() {
        return Err(Error::InvalidArgument(format!(
            "index (l={l}, k={k}) out of range for n={n}, d={}",
            x.d()
        )));
    }
    check_distinct_from(x, l)?;
    let mut dl = DMatrix::zeros(n, n);
    for j in 0..n {
        if j == l {
            continue;
        }
        let da = weight_partial(x, params, l, j, k);
        dl[(l, j)] -= da;
        dl[(j, l)] -= da;
        dl[(l, l)] += da;
        dl[(j, j)] += da;
    }
    Ok(dl)
}

/// Cofactor matrix of a symmetric matrix.
///
/// Uses `det * M^{-1}` when `M` is well conditioned. Otherwise the adjugate is
/// assembled from the eigendecomposition `M = Q diag(v) Q^T` as
/// `Q diag(prod_{j != i} v_j) Q^T`, which stays finite when `M` is singular.
pub fn cofactor_symmetric(m: &DMatrix<f64>, det: f64) -> DMatrix<f64> {
    let k = m.nrows();
    if k == 0 {
        return DMatrix::zeros(0, 0);
    }
    if k == 1 {
        return DMatrix::from_element(1, 1, 1.0);
    }
    let eig = SymmetricEigen::new(m.clone());
    let (lo, hi) = eig
        .eigenvalues
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), v| {
            (lo.min(v.abs()), hi.max(v.abs()))
        });
    if det != 0.0 && lo > 0.0 && hi / lo <= COFACTOR_COND_LIMIT {
        if let Some(inv) = m.clone().lu().try_inverse() {
            let c = inv * det;
            return (&c + c.transpose()) * 0.5;
        }
    }
    let v = &eig.eigenvalues;
    let others: Vec<f64> = (0..k)
        .map(|i| (0..k).filter(|&j| j != i).map(|j| v[j]).product())
        .collect();
    let q = &eig.eigenvectors;
    let mut c = DMatrix::zeros(k, k);
    for (i, w) in others.iter().enumerate() {
        let col = q.column(i);
        c += (col * col.transpose()) * *w;
    }
    c
}

/// Gradient of `det M(x)` with respect to every coordinate, stacked as `[x_1; ...; x_n]`.
///
/// Each component is `tr[C^T P^T (dL/dx_l^(k)) P]` with `C` the cofactor matrix of `M`.
/// Since `dL/dx_l^(k) = sum_j da_lj (e_l - e_j)(e_l - e_j)^T`, the trace reduces to
/// `sum_j da_lj (B_ll + B_jj - 2 B_lj)` with `B = P C P^T`.
pub fn grad_det_m(x: &SensorConfiguration, params: &EdgeWeightParams) -> Result<Vec<f64>> {
    let (n, d) = (x.n(), x.d());
    if let Some((i, j)) = x.coincident_pair() {
        return Err(Error::SingularConfiguration(i, j));
    }
    let mut grad = vec![0.0; n * d];
    if n < 2 {
        return Ok(grad);
    }
    let red = reduced_laplacian(x, params);
    let c = cofactor_symmetric(&red.m, red.det);
    let b = &red.p * c * red.p.transpose();
    for l in 0..n {
        for j in 0..n {
            if j == l {
                continue;
            }
            let s = b[(l, l)] + b[(j, j)] - b[(l, j)] - b[(j, l)];
            let dist = x.distance(l, j);
            let coef = params.weight_slope(dist) / dist * s;
            let (pl, pj) = (x.position(l), x.position(j));
            for k in 0..d {
                grad[l * d + k] += coef * (pl[k] - pj[k]);
            }
        }
    }
    Ok(grad)
}

/// Same gradient as [`grad_det_m`], forming every `P^T (dL/dx_l^(k)) P` explicitly.
/// Quadratic in `n` times slower; kept as an independent route for checking.
pub fn grad_det_m_by_trace(x: &SensorConfiguration, params: &EdgeWeightParams) -> Result<Vec<f64>> {
    let (n, d) = (x.n(), x.d());
    if let Some((i, j)) = x.coincident_pair() {
        return Err(Error::SingularConfiguration(i, j));
    }
    let mut grad = vec![0.0; n * d];
    if n < 2 {
        return Ok(grad);
    }
    let red = reduced_laplacian(x, params);
    let c = cofactor_symmetric(&red.m, red.det);
    for l in 0..n {
        for k in 0..d {
            let dm = red.p.transpose() * partial_laplacian(x, params, l, k)? * &red.p;
            grad[l * d + k] = (c.transpose() * dm).trace();
        }
    }
    Ok(grad)
}

/// Second-smallest Laplacian eigenvalue. Diagnostic only; it is not differentiable.
/// A single sensor has no second eigenvalue and reports 0.
pub fn algebraic_connectivity(x: &SensorConfiguration, params: &EdgeWeightParams) -> f64 {
    if x.n() < 2 {
        return 0.0;
    }
    laplacian_spectrum(x, params)[1]
}

/// All Laplacian eigenvalues, ascending.
pub fn laplacian_spectrum(x: &SensorConfiguration, params: &EdgeWeightParams) -> Vec<f64> {
    sorted_eigenvalues(&laplacian(x, params))
}

/// Pairs `(i, j)`, `i < j`, whose edge weight is at least `threshold`.
pub fn threshold_edges(
    x: &SensorConfiguration,
    params: &EdgeWeightParams,
    threshold: f64,
) -> Vec<(usize, usize)> {
    let a = adjacency(x, params);
    let n = x.n();
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if a[(i, j)] >= threshold {
                edges.push((i, j));
            }
        }
    }
    edges
}

/// Whether the unweighted graph with the given edge list spans all `n` nodes.
pub fn is_connected(n: usize, edges: &[(usize, usize)]) -> bool {
    if n == 0 {
        return true;
    }
    let mut adj = vec![Vec::new(); n];
    for &(i, j) in edges {
        adj[i].push(j);
        adj[j].push(i);
    }
    let mut seen = vec![false; n];
    let mut stack = vec![0];
    seen[0] = true;
    while let Some(v) = stack.pop() {
        for &u in &adj[v] {
            if !seen[u] {
                seen[u] = true;
                stack.push(u);
            }
        }
    }
    seen.into_iter().all(|s| s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn params() -> EdgeWeightParams {
        EdgeWeightParams::new(20.0, 0.1).unwrap()
    }

    fn pair(dist: f64) -> SensorConfiguration {
        SensorConfiguration::new(2, 2, vec![0.3, 0.4, 0.3 + dist, 0.4]).unwrap()
    }

    #[test]
    fn sigmoid_is_stable_at_extremes() {
        assert_eq!(sigmoid(0.0), 0.5);
        assert_eq!(sigmoid(-1e4), 0.0);
        assert_eq!(sigmoid(1e4), 1.0);
        assert!(sigmoid(-700.0) > 0.0);
    }

    #[test]
    fn weight_at_range_is_half() {
        let a = adjacency(&pair(0.1), &params());
        assert_abs_diff_eq!(a[(0, 1)], 0.5, epsilon = 1e-15);
        assert_eq!(a[(0, 0)], 0.0);
    }

    #[test]
    fn threshold_distance_inverts_weight() {
        let p = params();
        assert_abs_diff_eq!(p.threshold_distance(0.5).unwrap(), 0.1, epsilon = 1e-15);
        for thr in [0.1, 0.3, 0.7, 0.85] {
            let d = p.threshold_distance(thr).unwrap();
            assert_abs_diff_eq!(p.weight(d), thr, epsilon = 1e-12);
        }
        assert!(p.threshold_distance(1.0).is_err());
        assert!(p.threshold_distance(0.0).is_err());
    }

    #[test]
    fn weight_limits() {
        let p = params();
        assert!(adjacency(&pair(50.0), &p)[(0, 1)] < 1e-300);
        let x = SensorConfiguration::new(2, 2, vec![0.3, 0.4, 0.3, 0.4]).unwrap();
        assert_abs_diff_eq!(adjacency(&x, &p)[(0, 1)], sigmoid(2.0), epsilon = 1e-15);
    }

    #[test]
    fn weight_at_twice_range() {
        let expected = 1.0 / (1.0 + 2f64.exp());
        assert_abs_diff_eq!(
            adjacency(&pair(0.2), &params())[(0, 1)],
            expected,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(expected, 0.1192, epsilon = 1e-4);
    }

    #[test]
    fn two_node_laplacian() {
        let l = laplacian(&pair(0.17), &params());
        let a = params().weight(0.17);
        assert_abs_diff_eq!(l[(0, 0)], a, epsilon = 1e-15);
        assert_abs_diff_eq!(l[(0, 1)], -a, epsilon = 1e-15);
        assert_abs_diff_eq!(l[(1, 1)], a, epsilon = 1e-15);
    }

    #[test]
    fn projection_for_two_nodes() {
        let p = projection_matrix(2).unwrap();
        let r = 1.0 / 2f64.sqrt();
        assert_abs_diff_eq!(p[(0, 0)], r, epsilon = 1e-15);
        assert_abs_diff_eq!(p[(1, 0)], -r, epsilon = 1e-15);
        assert!(projection_matrix(1).is_err());
    }

    #[test]
    fn projection_is_orthonormal_complement() {
        for n in 2..=50 {
            let p = projection_matrix(n).unwrap();
            let gram = p.transpose() * &p;
            let eye = DMatrix::<f64>::identity(n - 1, n - 1);
            assert!((gram - eye).amax() <= 1e-12, "n={n}");
            let ones = DMatrix::from_element(n, 1, 1.0);
            assert!((p.transpose() * ones).amax() <= 1e-12, "n={n}");
        }
    }

    #[test]
    fn equilateral_triangle_at_range() {
        let h = 0.1 * 3f64.sqrt() / 2.0;
        let x = SensorConfiguration::new(3, 2, vec![0.2, 0.2, 0.3, 0.2, 0.25, 0.2 + h]).unwrap();
        let red = reduced_laplacian(&x, &params());
        for ev in red.eigenvalues() {
            assert_abs_diff_eq!(ev, 1.5, epsilon = 1e-12);
        }
        assert_abs_diff_eq!(red.det, 2.25, epsilon = 1e-12);
    }

    #[test]
    fn single_sensor_is_trivially_connected() {
        let x = SensorConfiguration::new(1, 2, vec![0.5, 0.5]).unwrap();
        let red = reduced_laplacian(&x, &params());
        assert_eq!(red.det, 1.0);
        assert_eq!(grad_det_m(&x, &params()).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn separated_clusters_are_nearly_disconnected() {
        let x =
            SensorConfiguration::new(4, 2, vec![0.0, 0.0, 0.05, 0.0, 2.0, 2.0, 2.05, 2.0]).unwrap();
        assert!(adjacency(&x, &params())[(0, 2)] < 1e-12);
        assert!(det_m(&x, &params()) < 1e-10);
    }

    #[test]
    fn coincident_sensors_error_in_gradient_paths_only() {
        let x = SensorConfiguration::new(3, 2, vec![0.1, 0.1, 0.1, 0.1, 0.4, 0.2]).unwrap();
        assert!(det_m(&x, &params()).is_finite());
        assert!(matches!(
            grad_det_m(&x, &params()),
            Err(Error::SingularConfiguration(0, 1))
        ));
        assert!(partial_laplacian(&x, &params(), 0, 0).is_err());
        assert!(partial_laplacian(&x, &params(), 2, 0).is_ok());
    }

    #[test]
    fn isolated_sensor_has_zero_partial() {
        let x = SensorConfiguration::new(3, 2, vec![0.0, 0.0, 0.05, 0.0, 5.0, 5.0]).unwrap();
        let dl = partial_laplacian(&x, &params(), 2, 1).unwrap();
        assert!(dl.amax() < 1e-15);
    }

    #[test]
    fn cofactor_matches_adjugate_when_singular() {
        // rank-one 2x2: adj([[a, b], [b, c]]) = [[c, -b], [-b, a]]
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 4.0]);
        let c = cofactor_symmetric(&m, 0.0);
        let expected = DMatrix::from_row_slice(2, 2, &[4.0, -2.0, -2.0, 1.0]);
        assert!((c - expected).amax() < 1e-12);
    }

    #[test]
    fn two_node_gradient_by_hand() {
        let p = params();
        let x = SensorConfiguration::new(2, 2, vec![0.2, 0.3, 0.29, 0.35]).unwrap();
        let dist = x.distance(0, 1);
        let a = p.weight(dist);
        // det M = 2a, d det / d dist = -2 w a (1 - a)
        let ddist = -2.0 * p.w * a * (1.0 - a);
        let g = grad_det_m(&x, &p).unwrap();
        for k in 0..2 {
            let u = (x.position(0)[k] - x.position(1)[k]) / dist;
            assert_abs_diff_eq!(g[k], ddist * u, epsilon = 1e-13);
            assert_abs_diff_eq!(g[2 + k], -ddist * u, epsilon = 1e-13);
        }
    }

    #[test]
    fn threshold_graph() {
        let x = SensorConfiguration::new(3, 2, vec![0.0, 0.0, 0.09, 0.0, 0.18, 0.0]).unwrap();
        let e = threshold_edges(&x, &params(), 0.5);
        assert_eq!(e, vec![(0, 1), (1, 2)]);
        assert!(is_connected(3, &e));
        assert!(!is_connected(3, &e[..1]));
    }
}
