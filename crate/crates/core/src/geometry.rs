//! Configuration-space primitives.
//!
//! States live in a bounded box of `R^n` with axis-aligned hyperrectangle
//! obstacles. Free space is the closure of the complement of the obstacles,
//! so a state lying exactly on an obstacle face is valid.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{PlanError, Result};

/// Attempts allowed per informed sample before giving up.
pub const DEFAULT_REJECTION_BUDGET: usize = 10_000;

/// A point in the configuration space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct State(pub Vec<f64>);

impl State {
    pub fn new(coords: Vec<f64>) -> Self {
        State(coords)
    }

    /// A state with every coordinate set to `value`.
    pub fn filled(dim: usize, value: f64) -> Self {
        State(vec![value; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|c| c.is_finite())
    }

    /// Euclidean distance without a dimension check.
    #[inline]
    pub fn dist(&self, other: &State) -> f64 {
        debug_assert_eq!(self.dim(), other.dim());
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    /// Point at fraction `t` along the segment from `self` to `other`.
    pub fn lerp(&self, other: &State, t: f64) -> State {
        State(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(a, b)| a + (b - a) * t)
                .collect(),
        )
    }
}

impl From<Vec<f64>> for State {
    fn from(v: Vec<f64>) -> Self {
        State(v)
    }
}

impl std::ops::Index<usize> for State {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// Euclidean distance between two states of equal dimension.
pub fn distance(a: &State, b: &State) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(PlanError::DimensionMismatch {
            expected: a.dim(),
            got: b.dim(),
        });
    }
    Ok(a.dist(b))
}

/// Lebesgue measure of the unit `n`-ball, `pi^(n/2) / Gamma(n/2 + 1)`.
///
/// Evaluated through the recurrence `V_n = 2 pi / n * V_{n-2}` so no gamma
/// function is needed.
pub fn unit_ball_measure(n: i64) -> Result<f64> {
    if n <= 0 {
        return Err(PlanError::Contract(format!(
            "unit ball measure needs n >= 1, got {n}"
        )));
    }
    let mut v = if n % 2 == 0 { 1.0 } else { 2.0 };
    let mut k = if n % 2 == 0 { 2 } else { 3 };
    while k <= n {
        v *= 2.0 * PI / k as f64;
        k += 2;
    }
    Ok(v)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub lower: State,
    pub upper: State,
}

impl Bounds {
    pub fn new(lower: State, upper: State) -> Result<Self> {
        if lower.dim() != upper.dim() {
            return Err(PlanError::DimensionMismatch {
                expected: lower.dim(),
                got: upper.dim(),
            });
        }
        if !lower.is_finite() || !upper.is_finite() {
            return Err(PlanError::Contract("bounds must be finite".into()));
        }
        if lower.0.iter().zip(&upper.0).any(|(l, u)| l >= u) {
            return Err(PlanError::Contract(
                "bounds need lower < upper in every dimension".into(),
            ));
        }
        Ok(Bounds { lower, upper })
    }

    pub fn unit_cube(n: usize) -> Self {
        Bounds {
            lower: State::filled(n, 0.0),
            upper: State::filled(n, 1.0),
        }
    }

    pub fn dim(&self) -> usize {
        self.lower.dim()
    }

    pub fn measure(&self) -> f64 {
        self.lower
            .0
            .iter()
            .zip(&self.upper.0)
            .map(|(l, u)| u - l)
            .product()
    }

    pub fn contains(&self, x: &State) -> bool {
        x.0.iter()
            .zip(self.lower.0.iter().zip(&self.upper.0))
            .all(|(c, (l, u))| *c >= *l && *c <= *u)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxisAlignedBox {
    #[serde(rename = "min")]
    pub min_corner: State,
    #[serde(rename = "max")]
    pub max_corner: State,
}

impl AxisAlignedBox {
    pub fn new(min_corner: State, max_corner: State) -> Result<Self> {
        if min_corner.dim() != max_corner.dim() {
            return Err(PlanError::DimensionMismatch {
                expected: min_corner.dim(),
                got: max_corner.dim(),
            });
        }
        if min_corner
            .0
            .iter()
            .zip(&max_corner.0)
            .any(|(a, b)| !(a < b) || !a.is_finite() || !b.is_finite())
        {
            return Err(PlanError::Contract(
                "obstacle needs nonzero finite extent in every dimension".into(),
            ));
        }
        Ok(AxisAlignedBox {
            min_corner,
            max_corner,
        })
    }

    pub fn extent(&self, i: usize) -> f64 {
        self.max_corner[i] - self.min_corner[i]
    }

    /// True when `x` is in the open interior of the box.
    #[inline]
    pub fn contains_strictly(&self, x: &State) -> bool {
        x.0.iter()
            .zip(self.min_corner.0.iter().zip(&self.max_corner.0))
            .all(|(c, (lo, hi))| *c > *lo && *c < *hi)
    }

    /// Euclidean distance from `x` to the closed box (0 inside).
    pub fn distance_to(&self, x: &State) -> f64 {
        x.0.iter()
            .zip(self.min_corner.0.iter().zip(&self.max_corner.0))
            .map(|(c, (lo, hi))| {
                let d = if c < lo {
                    lo - c
                } else if c > hi {
                    c - hi
                } else {
                    0.0
                };
                d * d
            })
            .sum::<f64>()
            .sqrt()
    }

    /// The part of the box inside `bounds`, if it has nonzero volume.
    pub fn clipped(&self, bounds: &Bounds) -> Option<AxisAlignedBox> {
        let lo: Vec<f64> = self
            .min_corner
            .0
            .iter()
            .zip(&bounds.lower.0)
            .map(|(a, b)| a.max(*b))
            .collect();
        let hi: Vec<f64> = self
            .max_corner
            .0
            .iter()
            .zip(&bounds.upper.0)
            .map(|(a, b)| a.min(*b))
            .collect();
        AxisAlignedBox::new(State(lo), State(hi)).ok()
    }
}

/// Bounds plus obstacles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "WorldDoc", into = "WorldDoc")]
pub struct World {
    pub bounds: Bounds,
    pub obstacles: Vec<AxisAlignedBox>,
}

#[derive(Serialize, Deserialize)]
struct WorldDoc {
    dimension: usize,
    bounds: Bounds,
    obstacles: Vec<AxisAlignedBox>,
}

impl TryFrom<WorldDoc> for World {
    type Error = PlanError;
    fn try_from(doc: WorldDoc) -> Result<Self> {
        if doc.bounds.dim() != doc.dimension {
            return Err(PlanError::DimensionMismatch {
                expected: doc.dimension,
                got: doc.bounds.dim(),
            });
        }
        World::new(
            Bounds::new(doc.bounds.lower, doc.bounds.upper)?,
            doc.obstacles,
        )
    }
}

impl From<World> for WorldDoc {
    fn from(w: World) -> Self {
        WorldDoc {
            dimension: w.dim(),
            bounds: w.bounds,
            obstacles: w.obstacles,
        }
    }
}

impl World {
    pub fn new(bounds: Bounds, obstacles: Vec<AxisAlignedBox>) -> Result<Self> {
        let n = bounds.dim();
        if n < 2 {
            return Err(PlanError::Contract("worlds need dimension >= 2".into()));
        }
        for ob in &obstacles {
            if ob.min_corner.dim() != n || ob.max_corner.dim() != n {
                return Err(PlanError::DimensionMismatch {
                    expected: n,
                    got: ob.min_corner.dim(),
                });
            }
            AxisAlignedBox::new(ob.min_corner.clone(), ob.max_corner.clone())?;
            if ob.clipped(&bounds).is_none() {
                return Err(PlanError::Contract(
                    "obstacle does not overlap the bounds".into(),
                ));
            }
        }
        Ok(World { bounds, obstacles })
    }

    pub fn empty(n: usize) -> Self {
        World {
            bounds: Bounds::unit_cube(n),
            obstacles: Vec::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.bounds.dim()
    }

    /// Smallest extent of any obstacle (clipped to the bounds) in any dimension.
    pub fn smallest_obstacle_extent(&self) -> Option<f64> {
        self.obstacles
            .iter()
            .filter_map(|o| o.clipped(&self.bounds))
            .flat_map(|o| (0..o.min_corner.dim()).map(move |i| o.extent(i)))
            .min_by(f64::total_cmp)
    }

    /// Dense collision-check resolution used when none is configured.
    pub fn default_dense_resolution(&self) -> f64 {
        match self.smallest_obstacle_extent() {
            Some(e) => (0.25 * e).max(1e-3),
            None => {
                // no obstacles: any positive value gives the same answers
                let diag = self.bounds.lower.dist(&self.bounds.upper);
                (0.01 * diag).max(1e-3)
            }
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("world serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

/// True iff `x` is inside the bounds and outside every obstacle interior.
pub fn state_valid(x: &State, world: &World) -> bool {
    world.bounds.contains(x) && !world.obstacles.iter().any(|o| o.contains_strictly(x))
}

/// Outcome of an interpolated edge check.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MotionCheck {
    pub valid: bool,
    /// Number of interpolated states actually tested.
    pub checks: usize,
}

/// Number of interpolated states a check of this length would test.
pub fn check_count(length: f64, resolution: f64) -> usize {
    (length / resolution).ceil() as usize + 1
}

/// Checks `ceil(|b - a| / resolution) + 1` evenly spaced states from `a` to
/// `b`, stopping at the first collision.
pub fn motion_valid(a: &State, b: &State, world: &World, resolution: f64) -> MotionCheck {
    debug_assert!(resolution > 0.0);
    let len = a.dist(b);
    if len == 0.0 {
        return MotionCheck {
            valid: state_valid(a, world),
            checks: 1,
        };
    }
    let count = check_count(len, resolution);
    let segments = (count - 1) as f64;
    let mut scratch = a.clone();
    for k in 0..count {
        let t = k as f64 / segments;
        for (i, c) in scratch.0.iter_mut().enumerate() {
            *c = a[i] + (b[i] - a[i]) * t;
        }
        if !state_valid(&scratch, world) {
            return MotionCheck {
                valid: false,
                checks: k + 1,
            };
        }
    }
    MotionCheck {
        valid: true,
        checks: count,
    }
}

/// The informed set for path length: all states whose focal-distance sum is
/// at most the current solution cost.
#[derive(Debug, Clone, PartialEq)]
pub struct ProlateHyperspheroid {
    pub focus_start: State,
    pub focus_goal: State,
    pub l_min: f64,
    pub l_curr: f64,
    /// Row-major `n x n`; column `k` is the world-frame direction of axis `k`.
    pub rotation: Vec<f64>,
}

impl ProlateHyperspheroid {
    pub fn dim(&self) -> usize {
        self.focus_start.dim()
    }

    pub fn center(&self) -> State {
        self.focus_start.lerp(&self.focus_goal, 0.5)
    }

    /// Semi-axis lengths: the transverse one first, then the `n - 1` conjugate ones.
    pub fn semi_axes(&self) -> Vec<f64> {
        let n = self.dim();
        let mut axes = vec![self.conjugate_semi_axis(); n];
        axes[0] = self.l_curr / 2.0;
        axes
    }

    fn conjugate_semi_axis(&self) -> f64 {
        (self.l_curr * self.l_curr - self.l_min * self.l_min)
            .max(0.0)
            .sqrt()
            / 2.0
    }

    pub fn focal_sum(&self, x: &State) -> f64 {
        x.dist(&self.focus_start) + x.dist(&self.focus_goal)
    }

    pub fn contains(&self, x: &State) -> bool {
        self.focal_sum(x) <= self.l_curr
    }

    pub fn rotation_at(&self, row: usize, col: usize) -> f64 {
        self.rotation[row * self.dim() + col]
    }

    /// Maps a point from the hyperspheroid frame to the world frame.
    fn to_world(&self, local: &[f64]) -> State {
        let n = self.dim();
        let center = self.center();
        State(
            (0..n)
                .map(|i| {
                    center[i]
                        + (0..n)
                            .map(|k| self.rotation[i * n + k] * local[k])
                            .sum::<f64>()
                })
                .collect(),
        )
    }
}

/// Builds the informed set for a solution of the given cost.
pub fn phs_from_solution(start: &State, goal: &State, cost: f64) -> Result<ProlateHyperspheroid> {
    let l_min = distance(start, goal)?;
    if l_min == 0.0 {
        return Err(PlanError::DegenerateFoci);
    }
    // costs a few ulps under l_min come from summing the same segment
    if !(cost >= l_min * (1.0 - 1e-12)) {
        return Err(PlanError::InfeasibleCost { cost, l_min });
    }
    let cost = cost.max(l_min);
    let n = start.dim();
    let axis: Vec<f64> = (0..n).map(|i| (goal[i] - start[i]) / l_min).collect();
    let rotation = orthonormal_frame(&axis);
    Ok(ProlateHyperspheroid {
        focus_start: start.clone(),
        focus_goal: goal.clone(),
        l_min,
        l_curr: cost,
        rotation,
    })
}

/// Orthonormal basis whose first vector is `axis` (unit length), completed by
/// Gram-Schmidt over the standard basis minus its most parallel member.
fn orthonormal_frame(axis: &[f64]) -> Vec<f64> {
    let n = axis.len();
    let skip = (0..n)
        .max_by(|&a, &b| axis[a].abs().total_cmp(&axis[b].abs()))
        .unwrap_or(0);
    let mut basis: Vec<Vec<f64>> = vec![axis.to_vec()];
    for j in (0..n).filter(|&j| j != skip) {
        let mut v = vec![0.0; n];
        v[j] = 1.0;
        // modified Gram-Schmidt, run twice for numerical orthogonality
        for _ in 0..2 {
            for b in &basis {
                let dot: f64 = v.iter().zip(b).map(|(x, y)| x * y).sum();
                for (x, y) in v.iter_mut().zip(b) {
                    *x -= dot * y;
                }
            }
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        for x in &mut v {
            *x /= norm;
        }
        basis.push(v);
    }
    let mut rot = vec![0.0; n * n];
    for (k, col) in basis.iter().enumerate() {
        for i in 0..n {
            rot[i * n + k] = col[i];
        }
    }
    rot
}

/// Lebesgue measure of the hyperspheroid.
pub fn phs_measure(phs: &ProlateHyperspheroid) -> f64 {
    let n = phs.dim();
    let zeta = unit_ball_measure(n as i64).expect("dimension >= 1");
    phs.semi_axes().iter().product::<f64>() * zeta
}

pub fn sample_uniform<R: Rng + ?Sized>(bounds: &Bounds, rng: &mut R) -> State {
    State(
        bounds
            .lower
            .0
            .iter()
            .zip(&bounds.upper.0)
            .map(|(l, u)| l + (u - l) * rng.random::<f64>())
            .collect(),
    )
}

/// Uniform sample from the unit `n`-ball.
pub fn sample_unit_ball<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<f64> {
    loop {
        let mut v: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            continue;
        }
        let radius = rng.random::<f64>().powf(1.0 / n as f64);
        for x in &mut v {
            *x *= radius / norm;
        }
        return v;
    }
}

/// Uniform sample from the hyperspheroid intersected with `bounds`.
pub fn sample_informed<R: Rng + ?Sized>(
    phs: &ProlateHyperspheroid,
    bounds: &Bounds,
    rng: &mut R,
) -> Result<State> {
    sample_informed_with_budget(phs, bounds, rng, DEFAULT_REJECTION_BUDGET)
}

pub fn sample_informed_with_budget<R: Rng + ?Sized>(
    phs: &ProlateHyperspheroid,
    bounds: &Bounds,
    rng: &mut R,
    budget: usize,
) -> Result<State> {
    let axes = phs.semi_axes();
    for _ in 0..budget {
        let mut ball = sample_unit_ball(phs.dim(), rng);
        for (x, a) in ball.iter_mut().zip(&axes) {
            *x *= a;
        }
        let x = phs.to_world(&ball);
        if bounds.contains(&x) {
            return Ok(x);
        }
    }
    Err(PlanError::SamplingStarved(budget))
}

/// Union of the hyperspheroids of every goal: the states that could still
/// improve a solution of cost `cost`.
#[derive(Debug, Clone, PartialEq)]
pub struct InformedSet {
    pub cost: f64,
    pub hyperspheroids: Vec<ProlateHyperspheroid>,
}

impl InformedSet {
    pub fn new(start: &State, goals: &[State], cost: f64) -> Result<Self> {
        let hyperspheroids = goals
            .iter()
            .map(|g| phs_from_solution(start, g, cost))
            .collect::<Result<Vec<_>>>()?;
        Ok(InformedSet {
            cost,
            hyperspheroids,
        })
    }

    pub fn contains(&self, x: &State) -> bool {
        self.hyperspheroids.iter().any(|p| p.contains(x))
    }

    /// Smallest focal-distance sum over the goals.
    pub fn focal_sum(&self, x: &State) -> f64 {
        self.hyperspheroids
            .iter()
            .map(|p| p.focal_sum(x))
            .fold(f64::INFINITY, f64::min)
    }

    /// Sum of the member measures; exact for a single goal, an upper bound otherwise.
    pub fn measure(&self) -> f64 {
        self.hyperspheroids.iter().map(phs_measure).sum()
    }

    /// Uniform sample from the union intersected with `bounds`.
    ///
    /// Picks a member in proportion to its measure and accepts the point with
    /// probability one over the number of members containing it.
    pub fn sample<R: Rng + ?Sized>(&self, bounds: &Bounds, rng: &mut R, budget: usize) -> Result<State> {
        if self.hyperspheroids.len() == 1 {
            return sample_informed_with_budget(&self.hyperspheroids[0], bounds, rng, budget);
        }
        let measures: Vec<f64> = self.hyperspheroids.iter().map(phs_measure).collect();
        let total: f64 = measures.iter().sum();
        for _ in 0..budget {
            let pick = if total > 0.0 {
                let mut u = rng.random::<f64>() * total;
                let mut chosen = measures.len() - 1;
                for (i, m) in measures.iter().enumerate() {
                    if u < *m {
                        chosen = i;
                        break;
                    }
                    u -= m;
                }
                chosen
            } else {
                rng.random_range(0..measures.len())
            };
            let x = sample_informed_with_budget(&self.hyperspheroids[pick], bounds, rng, budget)?;
            let covering = self.hyperspheroids.iter().filter(|p| p.contains(&x)).count().max(1);
            if covering == 1 || rng.random::<f64>() * (covering as f64) < 1.0 {
                return Ok(x);
            }
        }
        Err(PlanError::SamplingStarved(budget))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn s(v: &[f64]) -> State {
        State(v.to_vec())
    }

    #[test]
    fn distance_examples() {
        assert_eq!(distance(&s(&[0.0, 0.0]), &s(&[0.0, 0.0])).unwrap(), 0.0);
        assert_eq!(distance(&s(&[0.0, 0.0]), &s(&[3.0, 4.0])).unwrap(), 5.0);
        let d = distance(&s(&[0.2, 0.5]), &s(&[0.8, 0.5])).unwrap();
        assert!((d - 0.6).abs() < 1e-12);
        assert!(matches!(
            distance(&s(&[0.0, 0.0]), &s(&[0.0, 0.0, 0.0])),
            Err(PlanError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn unit_ball_examples() {
        assert_eq!(unit_ball_measure(1).unwrap(), 2.0);
        assert!((unit_ball_measure(2).unwrap() - std::f64::consts::PI).abs() < 1e-10);
        assert!((unit_ball_measure(3).unwrap() - 4.1887902048).abs() < 1e-10);
        assert!(unit_ball_measure(0).is_err());
        assert!(unit_ball_measure(-3).is_err());
    }

    #[test]
    fn unit_ball_matches_gamma_formula() {
        for n in 1..=12 {
            let oracle = PI.powf(n as f64 / 2.0) / statrs::function::gamma::gamma(n as f64 / 2.0 + 1.0);
            let got = unit_ball_measure(n).unwrap();
            assert!((got - oracle).abs() < 1e-12 * oracle.max(1.0), "n={n}");
        }
    }

    #[test]
    fn phs_examples() {
        let phs = phs_from_solution(&s(&[0.2, 0.5]), &s(&[0.8, 0.5]), 0.6).unwrap();
        assert!((phs.l_min - 0.6).abs() < 1e-12);
        assert_eq!(phs.l_curr, phs.l_min);
        assert_eq!(phs_measure(&phs), 0.0);

        let phs = phs_from_solution(&s(&[0.0, 0.0]), &s(&[1.0, 0.0]), 1.25).unwrap();
        let axes = phs.semi_axes();
        assert!((axes[0] - 0.625).abs() < 1e-12);
        assert!((axes[1] - 0.375).abs() < 1e-12);
        assert!((phs_measure(&phs) - 0.7363108).abs() < 1e-7);

        assert!(matches!(
            phs_from_solution(&s(&[0.0, 0.0]), &s(&[1.0, 0.0]), 0.9),
            Err(PlanError::InfeasibleCost { .. })
        ));
        assert_eq!(
            phs_from_solution(&s(&[0.3, 0.3]), &s(&[0.3, 0.3]), 1.0),
            Err(PlanError::DegenerateFoci)
        );
    }

    #[test]
    fn rotation_first_column_and_orthonormal() {
        let phs = phs_from_solution(
            &s(&[0.1, 0.9, 0.3, 0.2]),
            &s(&[0.7, 0.2, 0.5, 0.9]),
            2.0,
        )
        .unwrap();
        let n = 4;
        for i in 0..n {
            let want = (phs.focus_goal[i] - phs.focus_start[i]) / phs.l_min;
            assert!((phs.rotation_at(i, 0) - want).abs() < 1e-12);
        }
        for i in 0..n {
            for j in 0..n {
                let dot: f64 = (0..n).map(|k| phs.rotation_at(i, k) * phs.rotation_at(j, k)).sum();
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((dot - want).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn phs_measure_agrees_with_monte_carlo() {
        let phs = phs_from_solution(&s(&[0.0, 0.0]), &s(&[1.0, 0.0]), 1.25).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        // bounding box of the ellipse: [-0.125, 1.125] x [-0.375, 0.375]
        let bx = Bounds::new(s(&[-0.125, -0.375]), s(&[1.125, 0.375])).unwrap();
        let trials = 1_000_000;
        let hits = (0..trials)
            .filter(|_| phs.contains(&sample_uniform(&bx, &mut rng)))
            .count();
        let estimate = hits as f64 / trials as f64 * bx.measure();
        let exact = phs_measure(&phs);
        assert!((estimate - exact).abs() / exact < 0.01, "{estimate} vs {exact}");
    }

    #[test]
    fn uniform_sampling() {
        let b = Bounds::unit_cube(2);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..10_000 {
            assert!(b.contains(&sample_uniform(&b, &mut rng)));
        }
        let mut mean = [0.0; 2];
        let n = 100_000;
        for _ in 0..n {
            let x = sample_uniform(&b, &mut rng);
            mean[0] += x[0];
            mean[1] += x[1];
        }
        for m in mean {
            assert!((m / n as f64 - 0.5).abs() < 0.01);
        }
        let mut a = ChaCha8Rng::seed_from_u64(5);
        let mut c = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            assert_eq!(sample_uniform(&b, &mut a), sample_uniform(&b, &mut c));
        }
    }

    #[test]
    fn informed_sampling_degenerate_stays_on_segment() {
        let start = s(&[0.2, 0.5]);
        let goal = s(&[0.8, 0.5]);
        let phs = phs_from_solution(&start, &goal, 0.6).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..1000 {
            let x = sample_informed(&phs, &Bounds::unit_cube(2), &mut rng).unwrap();
            assert!((x[1] - 0.5).abs() < 1e-9);
            assert!(x[0] >= 0.2 - 1e-9 && x[0] <= 0.8 + 1e-9);
        }
    }

    #[test]
    fn informed_sampling_inequality_and_symmetry() {
        let start = s(&[0.0, 0.0]);
        let goal = s(&[1.0, 0.0]);
        let phs = phs_from_solution(&start, &goal, 1.25).unwrap();
        let wide = Bounds::new(s(&[-2.0, -2.0]), s(&[3.0, 2.0])).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut left = 0;
        let n = 100_000;
        for k in 0..n {
            let x = sample_informed(&phs, &wide, &mut rng).unwrap();
            if k < 10_000 {
                assert!(phs.focal_sum(&x) <= 1.25 + 1e-9);
            }
            if x[0] < 0.5 {
                left += 1;
            }
        }
        let frac = left as f64 / n as f64;
        assert!((frac - 0.5).abs() < 0.02, "{frac}");
    }

    #[test]
    fn informed_sampling_starves_outside_bounds() {
        let phs = phs_from_solution(&s(&[5.0, 5.0]), &s(&[6.0, 5.0]), 1.1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(
            sample_informed_with_budget(&phs, &Bounds::unit_cube(2), &mut rng, 100),
            Err(PlanError::SamplingStarved(100))
        );
    }

    fn one_box_world() -> World {
        World::new(
            Bounds::unit_cube(2),
            vec![AxisAlignedBox::new(s(&[0.4, 0.0]), s(&[0.6, 1.0])).unwrap()],
        )
        .unwrap()
    }

    #[test]
    fn state_validity_uses_closure() {
        let w = one_box_world();
        assert!(state_valid(&s(&[0.0, 0.0]), &World::empty(2)));
        assert!(state_valid(&s(&[1.0, 1.0]), &w));
        assert!(!state_valid(&s(&[0.5, 0.5]), &w));
        assert!(state_valid(&s(&[0.4, 0.5]), &w));
        assert!(!state_valid(&s(&[1.2, 0.5]), &w));
    }

    #[test]
    fn motion_validity_examples() {
        let w = one_box_world();
        let a = s(&[0.2, 0.2]);
        assert_eq!(
            motion_valid(&a, &a, &w, 0.01),
            MotionCheck {
                valid: true,
                checks: 1
            }
        );
        for res in [0.2, 0.1, 0.05, 0.013] {
            assert!(!motion_valid(&s(&[0.2, 0.5]), &s(&[0.8, 0.5]), &w, res).valid);
        }
        let free = motion_valid(&s(&[0.1, 0.1]), &s(&[0.1, 0.9]), &w, 0.1);
        assert!(free.valid);
        assert_eq!(free.checks, check_count(0.8, 0.1));
    }

    #[test]
    fn world_json_round_trip() {
        let w = one_box_world();
        let json = w.to_json();
        assert!(json.contains("\"dimension\": 2"));
        assert!(json.contains("\"min\""));
        assert_eq!(World::from_json(&json).unwrap(), w);
        let bad = r#"{"dimension": 3, "bounds": {"lower": [0,0], "upper": [1,1]}, "obstacles": []}"#;
        assert!(World::from_json(bad).is_err());
    }
}
