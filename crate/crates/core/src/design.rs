//! Design structure for indicator (cell-mean) models.
//!
//! Every batch is a partition of the observations into cells; its design
//! matrix `X_m` has one indicator column per observed cell. Column-span
//! inclusion between two such matrices is partition refinement, so the
//! containment relation, aliasing checks and constraint spaces are all
//! computed on cell maps rather than on dense `n × J` matrices.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;
use thiserror::Error;

use crate::formula::{BatchDef, ResolvedAlias};
use crate::numerics::{column_space_basis, project_constrained};

/// Largest dense constraint problem (cells × ancestor cells) attempted when
/// the combinatorial route does not apply.
const DENSE_LIMIT: usize = 4_000_000;
/// Inclusion-exclusion over maximal ancestors is exponential in their count.
const MAX_SWEEP_ANCESTORS: usize = 16;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DesignError {
    #[error("dataset has no observations")]
    EmptyDataset,
    #[error("response at row {row} is not finite")]
    NonFiniteResponse { row: usize },
    #[error("column `{factor}` has {found} entries, expected {expected}")]
    DimensionMismatch { factor: String, expected: usize, found: usize },
    #[error("level index out of range in column `{factor}` at row {row}")]
    LevelOutOfRange { factor: String, row: usize },
    #[error("batch refers to factor index {0}, which does not exist")]
    UnknownFactorIndex(usize),
    #[error("batches `{0}` and `{1}` span the same columns")]
    DuplicateSpan(String, String),
    #[error("batches `{0}` and `{1}` overlap without nesting (partial aliasing)")]
    PartialAliasing(String, String),
    #[error("declared alias `{coarse} = {fine}` does not hold in the data")]
    AliasViolation { coarse: String, fine: String },
    #[error("batch `{0}` is marked as error but does not have one cell per observation")]
    ResidualNotPerObservation(String),
    #[error("batch `{0}` has too many ancestors for exact degrees of freedom")]
    DesignTooLarge(String),
}

/// One categorical column.
#[derive(Debug, Clone, PartialEq)]
pub struct Factor {
    pub name: String,
    pub levels: Vec<usize>,
    pub level_names: Vec<String>,
}

/// Responses plus categorical factor columns.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    y: Vec<f64>,
    factors: Vec<Factor>,
}

impl Dataset {
    pub fn new(y: Vec<f64>, factors: Vec<Factor>) -> Result<Self, DesignError> {
        if y.is_empty() {
            return Err(DesignError::EmptyDataset);
        }
        if let Some(row) = y.iter().position(|v| !v.is_finite()) {
            return Err(DesignError::NonFiniteResponse { row });
        }
        for f in &factors {
            if f.levels.len() != y.len() {
                return Err(DesignError::DimensionMismatch {
                    factor: f.name.clone(),
                    expected: y.len(),
                    found: f.levels.len(),
                });
            }
            if let Some(row) = f.levels.iter().position(|&l| l >= f.level_names.len()) {
                return Err(DesignError::LevelOutOfRange { factor: f.name.clone(), row });
            }
        }
        Ok(Self { y, factors })
    }

    /// Build from string labels; levels are numbered in order of first appearance.
    pub fn from_labels<S: AsRef<str>>(
        y: Vec<f64>,
        columns: Vec<(String, Vec<S>)>,
    ) -> Result<Self, DesignError> {
        let factors = columns
            .into_iter()
            .map(|(name, labels)| {
                let mut level_names: Vec<String> = Vec::new();
                let mut index: BTreeMap<String, usize> = BTreeMap::new();
                let levels = labels
                    .iter()
                    .map(|l| {
                        let l = l.as_ref();
                        *index.entry(l.to_string()).or_insert_with(|| {
                            level_names.push(l.to_string());
                            level_names.len() - 1
                        })
                    })
                    .collect();
                Factor { name, levels, level_names }
            })
            .collect();
        Self::new(y, factors)
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn factors(&self) -> &[Factor] {
        &self.factors
    }

    pub fn factor_names(&self) -> Vec<&str> {
        self.factors.iter().map(|f| f.name.as_str()).collect()
    }
}

/// Cells of an ancestor batch seen from the coefficients of a finer batch.
#[derive(Debug, Clone, PartialEq)]
struct Grouping {
    group_of: Vec<usize>,
    sizes: Vec<usize>,
}

impl Grouping {
    fn new(group_of: Vec<usize>) -> Self {
        let n_groups = group_of.iter().max().map_or(0, |&g| g + 1);
        let mut sizes = vec![0; n_groups];
        for &g in &group_of {
            sizes[g] += 1;
        }
        Self { group_of, sizes }
    }

    /// `v - A v`, where `A` averages within groups.
    fn remove_group_means(&self, v: &mut [f64]) {
        let mut sums = vec![0.0; self.sizes.len()];
        for (x, &g) in v.iter().zip(&self.group_of) {
            sums[g] += x;
        }
        for (x, &g) in v.iter_mut().zip(&self.group_of) {
            *x -= sums[g] / self.sizes[g] as f64;
        }
    }
}

/// How the identifiable subspace (`C_m β = 0`) of a batch is represented.
#[derive(Debug, Clone, PartialEq)]
enum Identifiability {
    /// Averaging projections of the maximal ancestors commute: one sweep of
    /// group-mean removal is the exact projection.
    Sweep(Vec<Grouping>),
    /// Orthonormal constraint rows, `c_m × J_m`.
    Dense(DMatrix<f64>),
}

/// One row of the ANOVA table.
#[derive(Debug, Clone, PartialEq)]
pub struct Batch {
    pub label: String,
    /// Factor indices into the dataset; empty for a synthetic residual.
    pub factors: Vec<usize>,
    /// Cell index of every observation.
    pub cell_of: Vec<usize>,
    pub cell_counts: Vec<usize>,
    pub cell_labels: Vec<String>,
    pub df: usize,
    pub is_residual: bool,
    identifiability: Identifiability,
}

impl Batch {
    /// Number of coefficients `J_m`.
    pub fn j(&self) -> usize {
        self.cell_counts.len()
    }

    /// Number of linear constraints `c_m`.
    pub fn constraint_count(&self) -> usize {
        self.j() - self.df
    }

    /// Project coefficients onto the identifiable subspace (the null space of `C_m`).
    pub fn project_identifiable(&self, beta: &[f64]) -> Vec<f64> {
        match &self.identifiability {
            Identifiability::Sweep(groupings) => {
                let mut v = beta.to_vec();
                for g in groupings {
                    g.remove_group_means(&mut v);
                }
                v
            }
            Identifiability::Dense(c) => {
                project_constrained(beta, c).expect("constraint rows are orthonormal")
            }
        }
    }

    /// `C_m` as orthonormal rows. Dense; intended for small batches.
    pub fn constraint_matrix(&self) -> DMatrix<f64> {
        match &self.identifiability {
            Identifiability::Dense(c) => c.clone(),
            Identifiability::Sweep(groupings) => {
                let total: usize = groupings.iter().map(|g| g.sizes.len()).sum();
                let mut g = DMatrix::zeros(self.j(), total);
                let mut offset = 0;
                for grouping in groupings {
                    for (cell, &grp) in grouping.group_of.iter().enumerate() {
                        g[(cell, offset + grp)] = 1.0;
                    }
                    offset += grouping.sizes.len();
                }
                column_space_basis(&g).transpose()
            }
        }
    }

    /// Finite-population standard deviation of a coefficient vector:
    /// root mean square of its identifiable part over `df_m`.
    pub fn finite_population_sd(&self, beta: &[f64]) -> f64 {
        if self.df == 0 {
            return 0.0;
        }
        let p = self.project_identifiable(beta);
        libm::sqrt(p.iter().map(|x| x * x).sum::<f64>() / self.df as f64)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnbalancedCell {
    pub batch: usize,
    pub cell: usize,
    pub count: usize,
    pub expected: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NonOrthogonalPair {
    pub first: usize,
    pub second: usize,
    /// The cross-classification has an unobserved combination.
    pub empty_cell: bool,
}

/// Replication pattern of every batch.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BalanceReport {
    pub cell_counts: Vec<Vec<usize>>,
    pub batch_balanced: Vec<bool>,
    pub balanced: bool,
    pub first_unbalanced: Option<UnbalancedCell>,
    /// Every pair of crossed batches has proportional cell counts.
    pub orthogonal: bool,
    pub first_nonorthogonal: Option<NonOrthogonalPair>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DesignModel {
    n: usize,
    batches: Vec<Batch>,
    residual: usize,
    containment: Vec<Vec<usize>>,
    sweep_order: Vec<usize>,
    balance: BalanceReport,
}

impl DesignModel {
    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of batches `M`, residual included, grand mean excluded.
    pub fn len(&self) -> usize {
        self.batches.len()
    }

    pub fn is_empty(&self) -> bool {
        self.batches.is_empty()
    }

    pub fn batches(&self) -> &[Batch] {
        &self.batches
    }

    pub fn batch(&self, m: usize) -> &Batch {
        &self.batches[m]
    }

    pub fn residual(&self) -> usize {
        self.residual
    }

    /// `I(m)`: batches whose column span strictly contains batch `m`'s.
    pub fn containment(&self, m: usize) -> &[usize] {
        &self.containment[m]
    }

    /// Batch indices with every batch after all batches it is contained in.
    pub fn sweep_order(&self) -> &[usize] {
        &self.sweep_order
    }

    pub fn balance(&self) -> &BalanceReport {
        &self.balance
    }

    pub fn labels(&self) -> Vec<&str> {
        self.batches.iter().map(|b| b.label.as_str()).collect()
    }

    pub fn coefficient_count(&self) -> usize {
        self.batches.iter().map(Batch::j).sum()
    }
}

pub fn effective_df(design: &DesignModel, m: usize) -> usize {
    design.batches[m].df
}

pub fn containment_order(design: &DesignModel) -> &[Vec<usize>] {
    &design.containment
}

pub fn check_balance(design: &DesignModel) -> BalanceReport {
    design.balance.clone()
}

struct DisjointSet {
    parent: Vec<usize>,
}

impl DisjointSet {
    fn new(n: usize) -> Self {
        Self { parent: (0..n).collect() }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra.max(rb)] = ra.min(rb);
        }
    }

    /// Dense component label of every element, numbered by first appearance.
    fn labels(&mut self) -> (Vec<usize>, usize) {
        let n = self.parent.len();
        let mut relabel = vec![usize::MAX; n];
        let mut out = Vec::with_capacity(n);
        let mut next = 0;
        for i in 0..n {
            let r = self.find(i);
            if relabel[r] == usize::MAX {
                relabel[r] = next;
                next += 1;
            }
            out.push(relabel[r]);
        }
        (out, next)
    }
}

/// Partition of `0..len` given as a label per element, relabelled densely in
/// first-appearance order.
#[derive(Debug, Clone, PartialEq, Eq)]
struct Partition {
    of: Vec<usize>,
    blocks: usize,
}

impl Partition {
    fn densify(raw: impl IntoIterator<Item = u64>) -> Self {
        let mut ids: BTreeMap<u64, usize> = BTreeMap::new();
        let of: Vec<usize> = raw
            .into_iter()
            .map(|k| {
                let next = ids.len();
                *ids.entry(k).or_insert(next)
            })
            .collect();
        Self { of, blocks: ids.len() }
    }

    fn of_factors(data: &Dataset, factors: &[usize]) -> Self {
        let n = data.n();
        let mut current = Partition { of: vec![0; n], blocks: 1 };
        for &f in factors {
            let factor = &data.factors[f];
            let width = factor.level_names.len().max(1) as u64;
            current = Partition::densify(
                current.of.iter().zip(&factor.levels).map(|(&c, &l)| c as u64 * width + l as u64),
            );
        }
        current
    }

    /// Every block of `self` lies inside one block of `other`.
    fn refines(&self, other: &Partition) -> bool {
        if self.blocks < other.blocks {
            return false;
        }
        let mut image = vec![usize::MAX; self.blocks];
        for (&a, &b) in self.of.iter().zip(&other.of) {
            if image[a] == usize::MAX {
                image[a] = b;
            } else if image[a] != b {
                return false;
            }
        }
        true
    }

    /// Finest common coarsening.
    fn join(&self, other: &Partition) -> Partition {
        let mut ds = DisjointSet::new(self.blocks + other.blocks);
        for (&a, &b) in self.of.iter().zip(&other.of) {
            ds.union(a, self.blocks + b);
        }
        let (labels, _) = ds.labels();
        Partition::densify(self.of.iter().map(|&a| labels[a] as u64))
    }

    fn counts(&self) -> Vec<usize> {
        let mut c = vec![0; self.blocks];
        for &a in &self.of {
            c[a] += 1;
        }
        c
    }
}

/// Whether averaging within `a` and within `b` commute, i.e. counts are
/// proportional inside each block of the join. Returns `(commute, has_empty)`.
fn proportional(a: &Partition, b: &Partition) -> (bool, bool) {
    let join = a.join(b);
    let (na, nb, nj) = (a.counts(), b.counts(), join.counts());
    let mut keys: Vec<u64> = a
        .of
        .iter()
        .zip(&b.of)
        .map(|(&x, &y)| x as u64 * b.blocks as u64 + y as u64)
        .collect();
    keys.sort_unstable();
    // number of distinct a-blocks and b-blocks inside each join block
    let mut a_in = vec![0usize; join.blocks];
    let mut b_in = vec![0usize; join.blocks];
    let mut a_block = vec![usize::MAX; a.blocks];
    let mut b_block = vec![usize::MAX; b.blocks];
    for i in 0..a.of.len() {
        let j = join.of[i];
        if a_block[a.of[i]] == usize::MAX {
            a_block[a.of[i]] = j;
            a_in[j] += 1;
        }
        if b_block[b.of[i]] == usize::MAX {
            b_block[b.of[i]] = j;
            b_in[j] += 1;
        }
    }
    let mut pairs_in = vec![0usize; join.blocks];
    let mut ok = true;
    let mut i = 0;
    while i < keys.len() {
        let k = keys[i];
        let mut run = 0;
        while i < keys.len() && keys[i] == k {
            run += 1;
            i += 1;
        }
        let (x, y) = ((k / b.blocks as u64) as usize, (k % b.blocks as u64) as usize);
        let j = a_block[x];
        pairs_in[j] += 1;
        if run * nj[j] != na[x] * nb[y] {
            ok = false;
        }
    }
    let complete = (0..join.blocks).all(|j| pairs_in[j] == a_in[j] * b_in[j]);
    (ok && complete, !complete)
}

enum Ancestor {
    GrandMean,
    Batch(usize),
}

fn groupings_for(
    m: usize,
    maximal: &[Ancestor],
    parts: &[Partition],
) -> Vec<Grouping> {
    let cells = &parts[m];
    maximal
        .iter()
        .map(|anc| match anc {
            Ancestor::GrandMean => Grouping::new(vec![0; cells.blocks]),
            Ancestor::Batch(k) => {
                let mut group_of = vec![0; cells.blocks];
                for (&c, &g) in cells.of.iter().zip(&parts[*k].of) {
                    group_of[c] = g;
                }
                // relabel densely
                let p = Partition::densify(group_of.iter().map(|&g| g as u64));
                Grouping::new(p.of)
            }
        })
        .collect()
}

fn groupings_commute(a: &Grouping, b: &Grouping) -> bool {
    let pa = Partition { of: a.group_of.clone(), blocks: a.sizes.len() };
    let pb = Partition { of: b.group_of.clone(), blocks: b.sizes.len() };
    proportional(&pa, &pb).0
}

/// Blocks in the join of the selected groupings over `cells` coefficients.
fn join_blocks(groupings: &[&Grouping], cells: usize) -> usize {
    let mut ds = DisjointSet::new(cells);
    for g in groupings {
        let mut first = vec![usize::MAX; g.sizes.len()];
        for (cell, &grp) in g.group_of.iter().enumerate() {
            if first[grp] == usize::MAX {
                first[grp] = cell;
            } else {
                ds.union(first[grp], cell);
            }
        }
    }
    ds.labels().1
}

fn identifiability(
    label: &str,
    j: usize,
    groupings: Vec<Grouping>,
) -> Result<(usize, Identifiability), DesignError> {
    let k = groupings.len();
    let commute = k <= MAX_SWEEP_ANCESTORS
        && (0..k).all(|a| (a + 1..k).all(|b| groupings_commute(&groupings[a], &groupings[b])));
    if commute {
        // dim of a sum of commuting averaging ranges, by inclusion-exclusion
        let mut dim: i64 = 0;
        for mask in 1u32..(1u32 << k) {
            let chosen: Vec<&Grouping> =
                (0..k).filter(|&i| mask & (1 << i) != 0).map(|i| &groupings[i]).collect();
            let blocks = join_blocks(&chosen, j) as i64;
            if chosen.len() % 2 == 1 {
                dim += blocks;
            } else {
                dim -= blocks;
            }
        }
        let df = j as i64 - dim;
        debug_assert!(df >= 0);
        return Ok((df.max(0) as usize, Identifiability::Sweep(groupings)));
    }
    let total: usize = groupings.iter().map(|g| g.sizes.len()).sum();
    if j.saturating_mul(total) > DENSE_LIMIT {
        return Err(DesignError::DesignTooLarge(label.to_string()));
    }
    let mut g = DMatrix::zeros(j, total);
    let mut offset = 0;
    for grouping in &groupings {
        for (cell, &grp) in grouping.group_of.iter().enumerate() {
            g[(cell, offset + grp)] = 1.0;
        }
        offset += grouping.sizes.len();
    }
    let basis = column_space_basis(&g);
    let df = j - basis.ncols();
    Ok((df, Identifiability::Dense(basis.transpose())))
}

fn batch_label(data: &Dataset, factors: &[usize]) -> String {
    factors.iter().map(|&f| data.factors[f].name.as_str()).collect::<Vec<_>>().join(":")
}

fn factor_check(data: &Dataset, factors: &[usize]) -> Result<(), DesignError> {
    match factors.iter().find(|&&f| f >= data.factors.len()) {
        Some(&f) => Err(DesignError::UnknownFactorIndex(f)),
        None => Ok(()),
    }
}

/// Assemble indicator structure, containment, degrees of freedom and balance.
///
/// A batch with one cell per observation is the residual; if the model has
/// none, a synthetic per-observation `residual` batch is appended.
pub fn build_design(
    defs: &[BatchDef],
    data: &Dataset,
    aliases: &[ResolvedAlias],
) -> Result<DesignModel, DesignError> {
    let n = data.n();
    let mut parts: Vec<Partition> = Vec::with_capacity(defs.len() + 1);
    let mut labels: Vec<String> = Vec::with_capacity(defs.len() + 1);
    let mut factor_sets: Vec<Vec<usize>> = Vec::with_capacity(defs.len() + 1);
    for def in defs {
        factor_check(data, &def.factors)?;
        parts.push(Partition::of_factors(data, &def.factors));
        labels.push(def.label.clone());
        factor_sets.push(def.factors.clone());
    }

    // residual detection
    let per_obs: Vec<usize> = (0..parts.len()).filter(|&m| parts[m].blocks == n).collect();
    if let Some(def) = defs.iter().enumerate().find(|(m, d)| d.explicit_residual && parts[*m].blocks != n) {
        return Err(DesignError::ResidualNotPerObservation(def.1.label.clone()));
    }
    let residual = match per_obs.as_slice() {
        [] => {
            parts.push(Partition { of: (0..n).collect(), blocks: n });
            labels.push("residual".to_string());
            factor_sets.push(Vec::new());
            parts.len() - 1
        }
        [m] => *m,
        [a, b, ..] => return Err(DesignError::DuplicateSpan(labels[*a].clone(), labels[*b].clone())),
    };
    let big_m = parts.len();

    // refines[a][b]: span(X_b) ⊆ span(X_a)
    let mut refines = vec![vec![false; big_m]; big_m];
    for a in 0..big_m {
        for b in 0..big_m {
            refines[a][b] = a == b || parts[a].refines(&parts[b]);
        }
    }
    for a in 0..big_m {
        for b in a + 1..big_m {
            if refines[a][b] && refines[b][a] {
                return Err(DesignError::DuplicateSpan(labels[a].clone(), labels[b].clone()));
            }
        }
    }

    for alias in aliases {
        factor_check(data, &alias.coarse)?;
        factor_check(data, &alias.fine)?;
        let coarse = Partition::of_factors(data, &alias.coarse);
        let fine = Partition::of_factors(data, &alias.fine);
        if !fine.refines(&coarse) {
            return Err(DesignError::AliasViolation {
                coarse: batch_label(data, &alias.coarse),
                fine: batch_label(data, &alias.fine),
            });
        }
    }

    // crossed pairs must overlap only in a modelled span
    let mut first_nonorthogonal = None;
    for a in 0..big_m {
        for b in a + 1..big_m {
            if refines[a][b] || refines[b][a] {
                continue;
            }
            let join = parts[a].join(&parts[b]);
            let modelled = join.blocks == 1
                || (0..big_m).any(|c| parts[c].blocks == join.blocks && parts[c].refines(&join));
            if !modelled {
                return Err(DesignError::PartialAliasing(labels[a].clone(), labels[b].clone()));
            }
            if first_nonorthogonal.is_none() {
                let (ok, empty_cell) = proportional(&parts[a], &parts[b]);
                if !ok {
                    first_nonorthogonal = Some(NonOrthogonalPair { first: a, second: b, empty_cell });
                }
            }
        }
    }

    let containment: Vec<Vec<usize>> = (0..big_m)
        .map(|m| (0..big_m).filter(|&k| k != m && refines[k][m]).collect())
        .collect();
    let mut sweep_order: Vec<usize> = (0..big_m).collect();
    sweep_order.sort_by_key(|&m| (parts[m].blocks, m));

    let mut batches = Vec::with_capacity(big_m);
    for m in 0..big_m {
        let ancestors: Vec<usize> = (0..big_m).filter(|&k| k != m && refines[m][k]).collect();
        let maximal: Vec<Ancestor> = if ancestors.is_empty() {
            vec![Ancestor::GrandMean]
        } else {
            ancestors
                .iter()
                .filter(|&&k| !ancestors.iter().any(|&k2| k2 != k && refines[k2][k]))
                .map(|&k| Ancestor::Batch(k))
                .collect()
        };
        let groupings = groupings_for(m, &maximal, &parts);
        let j = parts[m].blocks;
        let (df, ident) = identifiability(&labels[m], j, groupings)?;

        let mut cell_labels = vec![String::new(); j];
        let mut seen = vec![false; j];
        for (i, &c) in parts[m].of.iter().enumerate() {
            if !seen[c] {
                seen[c] = true;
                cell_labels[c] = if factor_sets[m].is_empty() {
                    (i + 1).to_string()
                } else {
                    factor_sets[m]
                        .iter()
                        .map(|&f| data.factors[f].level_names[data.factors[f].levels[i]].as_str())
                        .collect::<Vec<_>>()
                        .join(":")
                };
            }
        }
        batches.push(Batch {
            label: labels[m].clone(),
            factors: factor_sets[m].clone(),
            cell_counts: parts[m].counts(),
            cell_of: parts[m].of.clone(),
            cell_labels,
            df,
            is_residual: m == residual,
            identifiability: ident,
        });
    }

    let mut first_unbalanced = None;
    let batch_balanced: Vec<bool> = batches
        .iter()
        .enumerate()
        .map(|(m, b)| {
            let expected = b.cell_counts[0];
            match b.cell_counts.iter().position(|&c| c != expected) {
                Some(cell) => {
                    if first_unbalanced.is_none() {
                        first_unbalanced = Some(UnbalancedCell {
                            batch: m,
                            cell,
                            count: b.cell_counts[cell],
                            expected,
                        });
                    }
                    false
                }
                None => true,
            }
        })
        .collect();
    let balance = BalanceReport {
        cell_counts: batches.iter().map(|b| b.cell_counts.clone()).collect(),
        balanced: batch_balanced.iter().all(|&b| b),
        batch_balanced,
        first_unbalanced,
        orthogonal: first_nonorthogonal.is_none(),
        first_nonorthogonal,
    };

    Ok(DesignModel { n, batches, residual, containment, sweep_order, balance })
}
