//! Desirability-function optimization and NSGA-II.

use std::io::Write;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::domain::DesignSpace;
use crate::error::{Error, Result};
use crate::linmodel::QuadraticModel;
use crate::optim::{latin_hypercube, NelderMead};
use crate::rng::seeded;

/// One-sided desirability for a response to be minimized.
pub fn desirability_min(y: f64, y_min: f64, y_max: f64) -> f64 {
    if y <= y_min {
        1.0
    } else if y >= y_max {
        0.0
    } else {
        (y_max - y) / (y_max - y_min)
    }
}

/// Weighted geometric mean `(Π d_i^w_i)^(1/n)`.
pub fn composite_desirability(d: &[f64], w: &[f64]) -> f64 {
    if d.is_empty() {
        return 0.0;
    }
    if d.iter().any(|v| *v <= 0.0) {
        return 0.0;
    }
    let log_sum: f64 = d.iter().zip(w).map(|(di, wi)| wi * di.ln()).sum();
    (log_sum / d.len() as f64).exp()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DesirabilityTarget {
    pub y_min: f64,
    pub y_max: f64,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesirabilitySpec {
    pub targets: Vec<DesirabilityTarget>,
}

impl DesirabilitySpec {
    pub fn new(targets: Vec<DesirabilityTarget>) -> Result<Self> {
        for t in &targets {
            if !(t.y_min < t.y_max) || !(t.weight > 0.0) {
                return Err(Error::InvalidInput(format!(
                    "desirability needs y_min < y_max and weight > 0, got {t:?}"
                )));
            }
        }
        if targets.is_empty() {
            return Err(Error::InvalidInput("no desirability targets".into()));
        }
        Ok(Self { targets })
    }

    /// Anchors at the observed per-objective min and max, unit weights.
    pub fn from_observations(responses: &[Vec<f64>]) -> Result<Self> {
        let k = responses.first().map_or(0, Vec::len);
        let targets = (0..k)
            .map(|j| {
                let (lo, hi) = responses
                    .iter()
                    .map(|r| r[j])
                    .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
                DesirabilityTarget {
                    y_min: lo,
                    y_max: hi,
                    weight: 1.0,
                }
            })
            .collect();
        Self::new(targets)
    }

    pub fn individual(&self, y: &[f64]) -> Vec<f64> {
        self.targets
            .iter()
            .zip(y)
            .map(|(t, v)| desirability_min(*v, t.y_min, t.y_max))
            .collect()
    }

    pub fn composite(&self, y: &[f64]) -> f64 {
        let w: Vec<f64> = self.targets.iter().map(|t| t.weight).collect();
        composite_desirability(&self.individual(y), &w)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DesirabilityFlag {
    /// D is zero everywhere that was sampled.
    AllZero,
    /// D does not vary over the box; any point is optimal.
    Flat,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesirabilityOptimum {
    pub settings: Vec<f64>,
    pub coded: Vec<f64>,
    pub predictions: Vec<f64>,
    pub individual: Vec<f64>,
    pub desirability: f64,
    pub flag: Option<DesirabilityFlag>,
}

const DESIRABILITY_STARTS: usize = 32;
// Ranks points on a D plateau by how far below y_min they predict. Small
// enough not to trade against any real change in D.
const PLATEAU_TIE_BREAK: f64 = 1e-6;

/// Multi-start Nelder–Mead maximization of composite desirability over the
/// coded `[-alpha, alpha]` box. Models predict in coded units. Where D is flat
/// at its maximum, lower normalized predictions win.
pub fn maximize_desirability(
    models: &[QuadraticModel],
    spec: &DesirabilitySpec,
    space: &DesignSpace,
    seed: u64,
) -> Result<DesirabilityOptimum> {
    if models.len() != spec.targets.len() || models.is_empty() {
        return Err(Error::InvalidInput(format!(
            "{} models for {} desirability targets",
            models.len(),
            spec.targets.len()
        )));
    }
    if let Some(m) = models.iter().find(|m| m.dim != space.dim()) {
        return Err(Error::DimensionMismatch {
            expected: space.dim(),
            got: m.dim,
        });
    }
    let predict = |x: &[f64]| -> Vec<f64> { models.iter().map(|m| m.predict(x)).collect() };
    let score = |x: &[f64]| {
        let y = predict(x);
        let below: f64 = spec
            .targets
            .iter()
            .zip(&y)
            .map(|(t, v)| t.weight * (v - t.y_min) / (t.y_max - t.y_min))
            .sum();
        spec.composite(&y) - PLATEAU_TIE_BREAK * below
    };

    let bounds = space.coded_bounds();
    let mut rng = seeded(seed, 0xde5);
    let starts = latin_hypercube(DESIRABILITY_STARTS, &bounds, &mut rng);
    let survey = latin_hypercube(200 * space.dim(), &bounds, &mut rng);
    let (d_lo, d_hi) = survey
        .iter()
        .chain(&starts)
        .map(|x| spec.composite(&predict(x)))
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), d| (a.min(d), b.max(d)));

    let nm = NelderMead {
        initial_step: 0.1,
        max_evals: 400 * space.dim(),
        f_tol: 1e-14,
        x_tol: 1e-7,
    };
    let best = starts
        .iter()
        .map(|s| nm.minimize(|x| -score(x), s, &bounds))
        .min_by(|a, b| a.value.total_cmp(&b.value))
        .expect("at least one start");

    let mut coded = best.x;
    space.clip_coded(&mut coded);
    let predictions = predict(&coded);
    let individual = spec.individual(&predictions);
    let desirability = spec.composite(&predictions);
    let flag = if desirability <= 0.0 && d_hi <= 0.0 {
        Some(DesirabilityFlag::AllZero)
    } else if (d_hi - d_lo).abs() < 1e-12 && (desirability - d_hi).abs() < 1e-12 {
        Some(DesirabilityFlag::Flat)
    } else {
        None
    };
    Ok(DesirabilityOptimum {
        settings: space.from_coded(&coded)?,
        coded,
        predictions,
        individual,
        desirability,
        flag,
    })
}

/// Minimization dominance: no worse everywhere, strictly better somewhere.
pub fn dominates(a: &[f64], b: &[f64]) -> bool {
    let mut strictly = false;
    for (x, y) in a.iter().zip(b) {
        if x > y {
            return false;
        }
        if x < y {
            strictly = true;
        }
    }
    strictly
}

/// Deb's fast non-dominated sort. Returns fronts of indices, best first.
pub fn fast_nondominated_sort(points: &[Vec<f64>]) -> Vec<Vec<usize>> {
    let n = points.len();
    let mut dominated_by_me: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut domination_count = vec![0usize; n];
    let mut fronts: Vec<Vec<usize>> = vec![Vec::new()];
    for p in 0..n {
        for q in (p + 1)..n {
            if dominates(&points[p], &points[q]) {
                dominated_by_me[p].push(q);
                domination_count[q] += 1;
            } else if dominates(&points[q], &points[p]) {
                dominated_by_me[q].push(p);
                domination_count[p] += 1;
            }
        }
    }
    fronts[0].extend((0..n).filter(|&p| domination_count[p] == 0));
    let mut i = 0;
    while !fronts[i].is_empty() {
        let mut next = Vec::new();
        for &p in &fronts[i] {
            for &q in &dominated_by_me[p] {
                domination_count[q] -= 1;
                if domination_count[q] == 0 {
                    next.push(q);
                }
            }
        }
        next.sort_unstable();
        i += 1;
        fronts.push(next);
    }
    fronts.pop();
    fronts
}

/// Crowding distance of each member of a front; boundary members get `+inf`.
pub fn crowding_distance(front: &[Vec<f64>]) -> Vec<f64> {
    let n = front.len();
    let mut dist = vec![0.0; n];
    if n <= 2 {
        return vec![f64::INFINITY; n];
    }
    let k = front[0].len();
    let mut order: Vec<usize> = (0..n).collect();
    #[allow(clippy::needless_range_loop)]
    for j in 0..k {
        order.sort_by(|&a, &b| front[a][j].total_cmp(&front[b][j]).then(a.cmp(&b)));
        let lo = front[order[0]][j];
        let hi = front[order[n - 1]][j];
        if hi <= lo {
            continue;
        }
        dist[order[0]] = f64::INFINITY;
        dist[order[n - 1]] = f64::INFINITY;
        for w in 1..n - 1 {
            let i = order[w];
            if dist[i].is_finite() {
                dist[i] += (front[order[w + 1]][j] - front[order[w - 1]][j]) / (hi - lo);
            }
        }
    }
    dist
}

/// Hypervolume dominated by `points` and bounded by `reference`
/// (minimization). Points not strictly better than the reference in every
/// objective contribute nothing.
pub fn hypervolume(points: &[Vec<f64>], reference: &[f64]) -> f64 {
    let pts: Vec<Vec<f64>> = points
        .iter()
        .filter(|p| p.iter().zip(reference).all(|(a, r)| a < r))
        .cloned()
        .collect();
    hv_recursive(pts, reference)
}

fn hv_recursive(mut pts: Vec<Vec<f64>>, reference: &[f64]) -> f64 {
    if pts.is_empty() {
        return 0.0;
    }
    let d = reference.len();
    if d == 1 {
        return reference[0] - pts.iter().map(|p| p[0]).fold(f64::INFINITY, f64::min);
    }
    pts.sort_by(|a, b| a[d - 1].total_cmp(&b[d - 1]));
    if d == 2 {
        // sweep upward in the second objective, tracking the best first
        let mut volume = 0.0;
        let mut best_first = f64::INFINITY;
        for i in 0..pts.len() {
            best_first = best_first.min(pts[i][0]);
            let upper = if i + 1 < pts.len() { pts[i + 1][1] } else { reference[1] };
            volume += (upper - pts[i][1]) * (reference[0] - best_first);
        }
        return volume;
    }
    let mut volume = 0.0;
    for i in 0..pts.len() {
        let upper = if i + 1 < pts.len() { pts[i + 1][d - 1] } else { reference[d - 1] };
        let depth = upper - pts[i][d - 1];
        if depth <= 0.0 {
            continue;
        }
        let slice: Vec<Vec<f64>> = pts[..=i].iter().map(|p| p[..d - 1].to_vec()).collect();
        let slice: Vec<Vec<f64>> = fast_nondominated_sort(&slice)[0]
            .iter()
            .map(|&k| slice[k].clone())
            .collect();
        volume += depth * hv_recursive(slice, &reference[..d - 1]);
    }
    volume
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParetoSolution {
    pub settings: Vec<f64>,
    pub objectives: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct ParetoFront {
    pub solutions: Vec<ParetoSolution>,
}

impl ParetoFront {
    pub fn len(&self) -> usize {
        self.solutions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.solutions.is_empty()
    }

    pub fn objectives(&self) -> Vec<Vec<f64>> {
        self.solutions.iter().map(|s| s.objectives.clone()).collect()
    }

    pub fn is_mutually_nondominated(&self) -> bool {
        let o = self.objectives();
        o.iter()
            .enumerate()
            .all(|(i, a)| o.iter().enumerate().all(|(j, b)| i == j || !dominates(a, b)))
    }

    /// CSV with one column per setting then one per objective.
    pub fn write_csv<W: Write>(&self, setting_names: &[&str], objective_names: &[&str], out: W) -> Result<()> {
        let io = |e: csv::Error| Error::InvalidInput(format!("csv write failed: {e}"));
        let mut w = csv::Writer::from_writer(out);
        let header: Vec<&str> = setting_names.iter().chain(objective_names).copied().collect();
        w.write_record(&header).map_err(io)?;
        for s in &self.solutions {
            let rec: Vec<String> = s.settings.iter().chain(&s.objectives).map(|v| v.to_string()).collect();
            w.write_record(&rec).map_err(io)?;
        }
        w.flush()
            .map_err(|e| Error::InvalidInput(format!("csv flush failed: {e}")))?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Nsga2Config {
    pub population: usize,
    pub generations: usize,
    pub crossover_prob: f64,
    pub crossover_eta: f64,
    /// Per-variable mutation probability; `None` means `1/d`.
    pub mutation_prob: Option<f64>,
    pub mutation_eta: f64,
    pub seed: u64,
    /// Hypervolume is logged every this many generations (0 disables).
    pub log_every: usize,
}

impl Default for Nsga2Config {
    fn default() -> Self {
        Self {
            population: 100,
            generations: 100,
            crossover_prob: 0.8,
            crossover_eta: 15.0,
            mutation_prob: None,
            mutation_eta: 20.0,
            seed: 0,
            log_every: 10,
        }
    }
}

impl Nsga2Config {
    pub fn validate(&self) -> Result<()> {
        let prob_ok = |p: f64| (0.0..=1.0).contains(&p);
        if self.population < 4 || !self.population.is_multiple_of(2) {
            return Err(Error::InvalidInput(format!(
                "population must be even and >= 4, got {}",
                self.population
            )));
        }
        if !prob_ok(self.crossover_prob) || !self.mutation_prob.is_none_or(prob_ok) {
            return Err(Error::InvalidInput("probabilities must lie in [0, 1]".into()));
        }
        if !(self.crossover_eta >= 0.0) || !(self.mutation_eta >= 0.0) {
            return Err(Error::InvalidInput("distribution indices must be >= 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GenerationLog {
    pub generation: usize,
    pub hypervolume: f64,
    pub front_size: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Nsga2Result {
    pub front: ParetoFront,
    pub reference: Vec<f64>,
    pub history: Vec<GenerationLog>,
}

pub type Evaluator<'a> = &'a (dyn Fn(&[f64]) -> f64 + Sync);

#[derive(Clone)]
struct Individual {
    coded: Vec<f64>,
    objectives: Vec<f64>,
    rank: usize,
    crowding: f64,
}

fn sbx<R: Rng>(a: &mut [f64], b: &mut [f64], bounds: &[(f64, f64)], eta: f64, rng: &mut R) {
    for j in 0..a.len() {
        if rng.random::<f64>() > 0.5 {
            continue;
        }
        let (lo, hi) = bounds[j];
        let (y1, y2) = if a[j] < b[j] { (a[j], b[j]) } else { (b[j], a[j]) };
        if (y2 - y1).abs() < 1e-14 {
            continue;
        }
        let u: f64 = rng.random();
        let spread = |beta: f64| {
            let alpha = 2.0 - beta.powf(-(eta + 1.0));
            if u <= 1.0 / alpha {
                (u * alpha).powf(1.0 / (eta + 1.0))
            } else {
                (1.0 / (2.0 - u * alpha)).powf(1.0 / (eta + 1.0))
            }
        };
        let beta_lo = 1.0 + 2.0 * (y1 - lo) / (y2 - y1);
        let beta_hi = 1.0 + 2.0 * (hi - y2) / (y2 - y1);
        let c1 = 0.5 * ((y1 + y2) - spread(beta_lo) * (y2 - y1));
        let c2 = 0.5 * ((y1 + y2) + spread(beta_hi) * (y2 - y1));
        let (c1, c2) = (c1.clamp(lo, hi), c2.clamp(lo, hi));
        if rng.random::<bool>() {
            a[j] = c2;
            b[j] = c1;
        } else {
            a[j] = c1;
            b[j] = c2;
        }
    }
}

fn polynomial_mutation<R: Rng>(x: &mut [f64], bounds: &[(f64, f64)], prob: f64, eta: f64, rng: &mut R) {
    for (v, &(lo, hi)) in x.iter_mut().zip(bounds) {
        if rng.random::<f64>() >= prob || hi <= lo {
            continue;
        }
        let d1 = (*v - lo) / (hi - lo);
        let d2 = (hi - *v) / (hi - lo);
        let u: f64 = rng.random();
        let power = 1.0 / (eta + 1.0);
        let dq = if u < 0.5 {
            let xy = 1.0 - d1;
            (2.0 * u + (1.0 - 2.0 * u) * xy.powf(eta + 1.0)).powf(power) - 1.0
        } else {
            let xy = 1.0 - d2;
            1.0 - (2.0 * (1.0 - u) + 2.0 * (u - 0.5) * xy.powf(eta + 1.0)).powf(power)
        };
        *v = (*v + dq * (hi - lo)).clamp(lo, hi);
    }
}

fn evaluate(evaluators: &[Evaluator], space: &DesignSpace, coded: &[f64]) -> Result<Vec<f64>> {
    let natural = space.from_coded(coded)?;
    let out: Vec<f64> = evaluators.iter().map(|f| f(&natural)).collect();
    if out.iter().any(|v| !v.is_finite()) {
        return Err(Error::Evaluation { settings: natural });
    }
    Ok(out)
}

fn assign_rank_and_crowding(pop: &mut [Individual]) -> Vec<Vec<usize>> {
    let objs: Vec<Vec<f64>> = pop.iter().map(|i| i.objectives.clone()).collect();
    let fronts = fast_nondominated_sort(&objs);
    for (r, front) in fronts.iter().enumerate() {
        let pts: Vec<Vec<f64>> = front.iter().map(|&i| objs[i].clone()).collect();
        for (&i, c) in front.iter().zip(crowding_distance(&pts)) {
            pop[i].rank = r;
            pop[i].crowding = c;
        }
    }
    fronts
}

/// Non-dominated set of every evaluated individual so far.
#[derive(Default)]
struct Archive {
    members: Vec<(Vec<f64>, Vec<f64>)>,
}

impl Archive {
    fn insert(&mut self, coded: &[f64], objectives: &[f64]) {
        let weakly = |a: &[f64], b: &[f64]| a.iter().zip(b).all(|(x, y)| x <= y);
        if self.members.iter().any(|(_, o)| weakly(o, objectives)) {
            return;
        }
        self.members.retain(|(_, o)| !dominates(objectives, o));
        self.members.push((coded.to_vec(), objectives.to_vec()));
    }

    fn hypervolume(&self, reference: &[f64]) -> f64 {
        let pts: Vec<Vec<f64>> = self.members.iter().map(|(_, o)| o.clone()).collect();
        hypervolume(&pts, reference)
    }
}

fn crowded_better(a: &Individual, b: &Individual) -> bool {
    a.rank < b.rank || (a.rank == b.rank && a.crowding > b.crowding)
}

/// Elitist NSGA-II over the coded `[-alpha, alpha]` box. Evaluators receive
/// natural-unit settings; a non-finite value aborts the run.
///
/// Selection is the standard crowded (μ+λ) scheme. The reported front and
/// the logged hypervolumes come from an archive of every non-dominated point
/// evaluated, so a solution dropped by crowding truncation is never lost.
pub fn nsga2(evaluators: &[Evaluator], space: &DesignSpace, config: &Nsga2Config) -> Result<Nsga2Result> {
    config.validate()?;
    if evaluators.is_empty() {
        return Err(Error::InvalidInput("no objective evaluators".into()));
    }
    let d = space.dim();
    let bounds = space.coded_bounds();
    let mutation_prob = config.mutation_prob.unwrap_or(1.0 / d as f64);
    let mut rng = seeded(config.seed, 0x25ca);
    let n = config.population;

    let mut pop: Vec<Individual> = (0..n)
        .map(|_| {
            let coded: Vec<f64> = bounds.iter().map(|&(lo, hi)| rng.random_range(lo..=hi)).collect();
            Ok(Individual {
                objectives: evaluate(evaluators, space, &coded)?,
                coded,
                rank: 0,
                crowding: 0.0,
            })
        })
        .collect::<Result<_>>()?;
    assign_rank_and_crowding(&mut pop);
    let mut archive = Archive::default();
    for ind in &pop {
        archive.insert(&ind.coded, &ind.objectives);
    }

    let k = evaluators.len();
    let reference: Vec<f64> = (0..k)
        .map(|j| pop.iter().map(|i| i.objectives[j]).fold(f64::NEG_INFINITY, f64::max))
        .collect();
    let mut history = vec![GenerationLog {
        generation: 0,
        hypervolume: archive.hypervolume(&reference),
        front_size: archive.members.len(),
    }];

    for generation in 1..=config.generations {
        let mut offspring: Vec<Individual> = Vec::with_capacity(n);
        while offspring.len() < n {
            let mut pick = || {
                let a = rng.random_range(0..n);
                let b = rng.random_range(0..n);
                if crowded_better(&pop[b], &pop[a]) {
                    b
                } else {
                    a
                }
            };
            let (p1, p2) = (pick(), pick());
            let mut c1 = pop[p1].coded.clone();
            let mut c2 = pop[p2].coded.clone();
            if rng.random::<f64>() < config.crossover_prob {
                sbx(&mut c1, &mut c2, &bounds, config.crossover_eta, &mut rng);
            }
            polynomial_mutation(&mut c1, &bounds, mutation_prob, config.mutation_eta, &mut rng);
            polynomial_mutation(&mut c2, &bounds, mutation_prob, config.mutation_eta, &mut rng);
            for c in [c1, c2] {
                if offspring.len() < n {
                    let objectives = evaluate(evaluators, space, &c)?;
                    archive.insert(&c, &objectives);
                    offspring.push(Individual {
                        objectives,
                        coded: c,
                        rank: 0,
                        crowding: 0.0,
                    });
                }
            }
        }

        let mut merged = pop;
        merged.extend(offspring);
        let merged_fronts = assign_rank_and_crowding(&mut merged);
        let mut next: Vec<usize> = Vec::with_capacity(n);
        for front in &merged_fronts {
            if next.len() + front.len() <= n {
                next.extend(front);
            } else {
                let mut rest = front.clone();
                rest.sort_by(|&a, &b| merged[b].crowding.total_cmp(&merged[a].crowding).then(a.cmp(&b)));
                next.extend(rest.into_iter().take(n - next.len()));
            }
            if next.len() == n {
                break;
            }
        }
        pop = next.into_iter().map(|i| merged[i].clone()).collect();
        assign_rank_and_crowding(&mut pop);

        let due = (config.log_every > 0 && generation % config.log_every == 0) || generation == config.generations;
        if due && history.last().is_none_or(|h| h.generation != generation) {
            history.push(GenerationLog {
                generation,
                hypervolume: archive.hypervolume(&reference),
                front_size: archive.members.len(),
            });
        }
    }

    let mut solutions: Vec<ParetoSolution> = archive
        .members
        .iter()
        .map(|(coded, objectives)| {
            Ok(ParetoSolution {
                settings: space.from_coded(coded)?,
                objectives: objectives.clone(),
            })
        })
        .collect::<Result<_>>()?;
    solutions.sort_by(|a, b| a.objectives[0].total_cmp(&b.objectives[0]));
    Ok(Nsga2Result {
        front: ParetoFront { solutions },
        reference,
        history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn desirability_examples() {
        assert!((desirability_min(7.42, 6.5, 9.8) - 0.721_212).abs() < 1e-6);
        assert!((desirability_min(30.28, 26.8, 46.8) - 0.826).abs() < 1e-12);
        assert_eq!(desirability_min(6.5, 6.5, 9.8), 1.0);
        assert_eq!(desirability_min(9.8, 6.5, 9.8), 0.0);
        assert!((desirability_min(8.15, 6.5, 9.8) - 0.5).abs() < 1e-12);
        assert_eq!(desirability_min(-3.0, 6.5, 9.8), 1.0);
    }

    #[test]
    fn composite_examples() {
        let d = composite_desirability(&[0.72102, 0.82617], &[1.0, 1.0]);
        assert!((d - 0.7718).abs() < 1e-4);
        assert_eq!(composite_desirability(&[0.0, 0.9], &[1.0, 1.0]), 0.0);
        assert!((composite_desirability(&[0.37, 0.37], &[1.0, 1.0]) - 0.37).abs() < 1e-12);
    }

    #[test]
    fn spec_validation() {
        let t = |lo, hi, w| DesirabilityTarget {
            y_min: lo,
            y_max: hi,
            weight: w,
        };
        assert!(DesirabilitySpec::new(vec![t(1.0, 0.0, 1.0)]).is_err());
        assert!(DesirabilitySpec::new(vec![t(0.0, 1.0, 0.0)]).is_err());
        assert!(DesirabilitySpec::new(vec![]).is_err());
        let s = DesirabilitySpec::from_observations(&[vec![1.0, 5.0], vec![3.0, 2.0]]).unwrap();
        assert_eq!(s.targets[0].y_min, 1.0);
        assert_eq!(s.targets[1].y_max, 5.0);
    }

    #[test]
    fn sort_example() {
        let pts = vec![vec![1.0, 5.0], vec![2.0, 3.0], vec![3.0, 4.0], vec![4.0, 1.0], vec![5.0, 5.0]];
        assert_eq!(fast_nondominated_sort(&pts), vec![vec![0, 1, 3], vec![2], vec![4]]);
        assert_eq!(fast_nondominated_sort(&[vec![1.0, 1.0]]), vec![vec![0]]);
        assert_eq!(fast_nondominated_sort(&[vec![1.0, 1.0], vec![1.0, 1.0]]), vec![vec![0, 1]]);
    }

    #[test]
    fn crowding_examples() {
        let d = crowding_distance(&[vec![0.0, 1.0], vec![0.5, 0.6], vec![1.0, 0.0]]);
        assert!(d[0].is_infinite() && d[2].is_infinite());
        assert!((d[1] - 2.0).abs() < 1e-12);
        assert!(crowding_distance(&[vec![0.0, 1.0], vec![1.0, 0.0]]).iter().all(|v| v.is_infinite()));
        let flat = crowding_distance(&[vec![1.0, 0.0], vec![1.0, 0.5], vec![1.0, 1.0]]);
        assert_eq!(flat[1], 1.0);
    }

    #[test]
    fn hypervolume_2d_and_3d() {
        let hv = hypervolume(&[vec![1.0, 3.0], vec![2.0, 2.0], vec![3.0, 1.0]], &[4.0, 4.0]);
        assert!((hv - 6.0).abs() < 1e-12);
        assert_eq!(hypervolume(&[vec![5.0, 0.0]], &[4.0, 4.0]), 0.0);
        let hv3 = hypervolume(&[vec![0.0, 0.0, 0.0]], &[1.0, 2.0, 3.0]);
        assert!((hv3 - 6.0).abs() < 1e-12);
        // two overlapping unit-ish boxes in 3-d: 2*2*1 + 1*1*2 - overlap(1*1*1)
        let hv3 = hypervolume(&[vec![0.0, 0.0, 1.0], vec![1.0, 1.0, 0.0]], &[2.0, 2.0, 2.0]);
        assert!((hv3 - 5.0).abs() < 1e-12);
    }

    #[test]
    fn config_validation() {
        let mut c = Nsga2Config::default();
        assert!(c.validate().is_ok());
        c.population = 7;
        assert!(c.validate().is_err());
        c.population = 8;
        c.crossover_prob = 1.5;
        assert!(c.validate().is_err());
    }

    #[test]
    fn evaluator_failure_reports_settings() {
        let space = DesignSpace::new(vec![crate::domain::Factor::new("x", "", -1.0, 1.0)], 1.0).unwrap();
        let bad = |_: &[f64]| f64::NAN;
        let err = nsga2(&[&bad], &space, &Nsga2Config::default()).unwrap_err();
        assert!(matches!(err, Error::Evaluation { .. }));
    }
}
