//! The allocation model: families with per-service requirements, places with
//! lower and upper quotas, and the assignment semantics built on top of them
//! (load, feasibility, acceptability, utility, Pareto improvement).

use std::cmp::Ordering;

use crate::error::{inapplicable, Error, Result};

/// Position of a place inside [`Instance::places`].
pub type PlaceId = usize;
/// Position of a family inside [`Instance::families`].
pub type FamilyId = usize;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Family {
    /// External label, preserved by the file format.
    pub id: u64,
    /// Units of each service the family needs.
    pub requirements: Vec<u64>,
}

impl Family {
    pub fn new(id: u64, requirements: Vec<u64>) -> Self {
        Self { id, requirements }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Place {
    pub id: u64,
    pub lower: Vec<u64>,
    pub upper: Vec<u64>,
}

impl Place {
    pub fn new(id: u64, lower: Vec<u64>, upper: Vec<u64>) -> Self {
        Self { id, lower, upper }
    }

    /// Whether `load + extra` stays within the upper quota.
    pub fn accommodates(&self, load: &[u64], extra: &[u64]) -> bool {
        self.upper
            .iter()
            .zip(load.iter().zip(extra))
            .all(|(&cap, (&l, &e))| l + e <= cap)
    }

    pub fn within_quotas(&self, load: &[u64]) -> bool {
        self.lower
            .iter()
            .zip(&self.upper)
            .zip(load)
            .all(|((&lo, &hi), &l)| lo <= l && l <= hi)
    }

    pub fn has_lower_quota(&self) -> bool {
        self.lower.iter().any(|&q| q > 0)
    }
}

/// Integer utility of every family for every place (row-major, one row per family).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UtilityMatrix {
    rows: Vec<Vec<i64>>,
}

impl UtilityMatrix {
    pub fn new(rows: Vec<Vec<i64>>) -> Self {
        Self { rows }
    }

    /// The same value `value` for every family/place pair.
    pub fn uniform(n: usize, m: usize, value: i64) -> Self {
        Self {
            rows: vec![vec![value; m]; n],
        }
    }

    pub fn get(&self, family: FamilyId, place: PlaceId) -> i64 {
        self.rows[family][place]
    }

    pub fn row(&self, family: FamilyId) -> &[i64] {
        &self.rows[family]
    }

    pub fn rows(&self) -> &[Vec<i64>] {
        &self.rows
    }

    /// `Some(w)` when every entry equals the same positive `w`.
    pub fn equal_value(&self) -> Option<i64> {
        let first = *self.rows.iter().flatten().next()?;
        (first > 0 && self.rows.iter().flatten().all(|&u| u == first)).then_some(first)
    }

    pub fn max_value(&self) -> Option<i64> {
        self.rows.iter().flatten().copied().max()
    }
}

/// Weak orders over acceptable places, stored as dense ranks.
///
/// Rank 1 is the most preferred group; equal ranks are ties; `None` marks an
/// unacceptable place.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PreferenceProfile {
    ranks: Vec<Vec<Option<u32>>>,
}

impl PreferenceProfile {
    /// Builds ranks from tie groups listed from most to least preferred.
    pub fn from_groups(groups: &[Vec<Vec<PlaceId>>], places: usize) -> Result<Self> {
        let mut ranks = Vec::with_capacity(groups.len());
        for (f, family_groups) in groups.iter().enumerate() {
            let mut row = vec![None; places];
            for (g, group) in family_groups.iter().enumerate() {
                if group.is_empty() {
                    return Err(Error::Model(format!("family {f}: empty tie group")));
                }
                for &p in group {
                    if p >= places {
                        return Err(Error::Model(format!("family {f}: unknown place {p}")));
                    }
                    if row[p].is_some() {
                        return Err(Error::Model(format!("family {f}: place {p} listed twice")));
                    }
                    row[p] = Some(g as u32 + 1);
                }
            }
            ranks.push(row);
        }
        Ok(Self { ranks })
    }

    pub fn from_ranks(ranks: Vec<Vec<Option<u32>>>) -> Result<Self> {
        for (f, row) in ranks.iter().enumerate() {
            let mut used: Vec<u32> = row.iter().flatten().copied().collect();
            used.sort_unstable();
            used.dedup();
            if used.iter().enumerate().any(|(i, &r)| r != i as u32 + 1) {
                return Err(Error::Model(format!(
                    "family {f}: ranks must form a contiguous range starting at 1"
                )));
            }
        }
        Ok(Self { ranks })
    }

    /// Every family finds every place acceptable and ties them all.
    pub fn indifferent(n: usize, m: usize) -> Self {
        Self {
            ranks: vec![vec![Some(1); m]; n],
        }
    }

    pub fn families(&self) -> usize {
        self.ranks.len()
    }

    pub fn rank(&self, family: FamilyId, place: PlaceId) -> Option<u32> {
        self.ranks[family][place]
    }

    pub fn ranks(&self, family: FamilyId) -> &[Option<u32>] {
        &self.ranks[family]
    }

    pub fn is_acceptable(&self, family: FamilyId, place: PlaceId) -> bool {
        self.ranks[family][place].is_some()
    }

    pub fn acceptable_places(&self, family: FamilyId) -> impl Iterator<Item = PlaceId> + '_ {
        self.ranks[family]
            .iter()
            .enumerate()
            .filter_map(|(p, r)| r.map(|_| p))
    }

    /// Tie groups from best to worst.
    pub fn groups(&self, family: FamilyId) -> Vec<Vec<PlaceId>> {
        let row = &self.ranks[family];
        let depth = row.iter().flatten().copied().max().unwrap_or(0) as usize;
        let mut groups = vec![Vec::new(); depth];
        for (p, r) in row.iter().enumerate() {
            if let Some(r) = r {
                groups[*r as usize - 1].push(p);
            }
        }
        groups
    }

    /// The family is indifferent between at least two acceptable places.
    pub fn has_ties(&self, family: FamilyId) -> bool {
        let mut seen: Vec<u32> = self.ranks[family].iter().flatten().copied().collect();
        let before = seen.len();
        seen.sort_unstable();
        seen.dedup();
        seen.len() < before
    }

    /// Compares two outcomes for `family`: `Greater` means `a` is strictly better.
    ///
    /// Unassigned is strictly worse than any acceptable place. Returns `None`
    /// when an unacceptable place is involved.
    pub fn compare(
        &self,
        family: FamilyId,
        a: Option<PlaceId>,
        b: Option<PlaceId>,
    ) -> Option<Ordering> {
        let rank = |p: Option<PlaceId>| -> Option<Option<u32>> {
            match p {
                None => Some(None),
                Some(p) => self.ranks[family][p].map(Some),
            }
        };
        match (rank(a)?, rank(b)?) {
            (None, None) => Some(Ordering::Equal),
            (Some(_), None) => Some(Ordering::Greater),
            (None, Some(_)) => Some(Ordering::Less),
            // smaller rank is better
            (Some(x), Some(y)) => Some(y.cmp(&x)),
        }
    }

    pub(crate) fn subset(&self, families: &[FamilyId]) -> Self {
        Self {
            ranks: families.iter().map(|&f| self.ranks[f].clone()).collect(),
        }
    }
}

/// A map from families to places or `None` (unassigned).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Assignment(Vec<Option<PlaceId>>);

impl Assignment {
    pub fn new(targets: Vec<Option<PlaceId>>) -> Self {
        Self(targets)
    }

    pub fn unassigned(n: usize) -> Self {
        Self(vec![None; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, family: FamilyId) -> Option<PlaceId> {
        self.0[family]
    }

    pub fn set(&mut self, family: FamilyId, place: Option<PlaceId>) {
        self.0[family] = place;
    }

    pub fn targets(&self) -> &[Option<PlaceId>] {
        &self.0
    }

    pub fn into_targets(self) -> Vec<Option<PlaceId>> {
        self.0
    }

    pub fn assigned_count(&self) -> usize {
        self.0.iter().filter(|t| t.is_some()).count()
    }

    pub fn families_at(&self, place: PlaceId) -> impl Iterator<Item = FamilyId> + '_ {
        self.0
            .iter()
            .enumerate()
            .filter_map(move |(f, t)| (*t == Some(place)).then_some(f))
    }
}

/// Parameters of an instance that the algorithms are parameterized by.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StructuralParams {
    pub n: usize,
    pub m: usize,
    pub t: usize,
    pub rmax: u64,
    pub cmax: u64,
    pub u_star: Option<i64>,
    /// Reporting only.
    pub u_max: Option<i64>,
    pub n_ties: usize,
    pub has_lower_quotas: bool,
    pub equal_utilities: bool,
    pub equal_preferences: bool,
    pub dichotomous_preferences: bool,
}

/// An instance with the removed families it was derived from, see [`Instance::normalize`].
#[derive(Debug, Clone)]
pub struct Normalized {
    pub instance: Instance,
    /// Original positions of the removed families.
    pub removed: Vec<FamilyId>,
    /// Original positions of the kept families, in order.
    pub kept: Vec<FamilyId>,
}

impl Normalized {
    /// Maps an assignment of the reduced instance back onto `original`.
    ///
    /// Removed families need no capacity; they go to a top-ranked acceptable
    /// place when preferences exist and stay unassigned otherwise.
    pub fn lift(&self, original: &Instance, reduced: &Assignment) -> Assignment {
        let mut out = Assignment::unassigned(original.n());
        for (k, &f) in self.kept.iter().enumerate() {
            out.set(f, reduced.get(k));
        }
        if let Some(prefs) = original.preferences() {
            for &f in &self.removed {
                let best = prefs
                    .acceptable_places(f)
                    .min_by_key(|&p| (prefs.rank(f, p), p));
                out.set(f, best);
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instance {
    services: usize,
    families: Vec<Family>,
    places: Vec<Place>,
    utilities: Option<UtilityMatrix>,
    preferences: Option<PreferenceProfile>,
}

impl Instance {
    pub fn new(
        services: usize,
        families: Vec<Family>,
        places: Vec<Place>,
        utilities: Option<UtilityMatrix>,
        preferences: Option<PreferenceProfile>,
    ) -> Result<Self> {
        if services == 0 {
            return Err(Error::Model("the number of services must be positive".into()));
        }
        for (i, f) in families.iter().enumerate() {
            if f.requirements.len() != services {
                return Err(Error::Model(format!(
                    "family {i} has {} requirements, expected {services}",
                    f.requirements.len()
                )));
            }
        }
        for (j, p) in places.iter().enumerate() {
            if p.lower.len() != services || p.upper.len() != services {
                return Err(Error::Model(format!(
                    "place {j} quota vectors must have length {services}"
                )));
            }
            if p.lower.iter().zip(&p.upper).any(|(lo, hi)| lo > hi) {
                return Err(Error::Model(format!("place {j}: lower quota exceeds upper quota")));
            }
        }
        let n = families.len();
        let m = places.len();
        if let Some(u) = &utilities {
            if u.rows.len() != n || u.rows.iter().any(|row| row.len() != m) {
                return Err(Error::Model(format!("utility matrix must be {n}x{m}")));
            }
        }
        if let Some(prefs) = &preferences {
            if prefs.ranks.len() != n || prefs.ranks.iter().any(|row| row.len() != m) {
                return Err(Error::Model(format!("preference profile must cover {n} families and {m} places")));
            }
        }
        Ok(Self {
            services,
            families,
            places,
            utilities,
            preferences,
        })
    }

    pub fn services(&self) -> usize {
        self.services
    }

    pub fn families(&self) -> &[Family] {
        &self.families
    }

    pub fn places(&self) -> &[Place] {
        &self.places
    }

    pub fn utilities(&self) -> Option<&UtilityMatrix> {
        self.utilities.as_ref()
    }

    pub fn preferences(&self) -> Option<&PreferenceProfile> {
        self.preferences.as_ref()
    }

    pub fn n(&self) -> usize {
        self.families.len()
    }

    pub fn m(&self) -> usize {
        self.places.len()
    }

    pub fn requirement(&self, family: FamilyId) -> &[u64] {
        &self.families[family].requirements
    }

    /// Utility of the pair, reading a missing matrix as all zeros.
    pub fn utility_or_zero(&self, family: FamilyId, place: PlaceId) -> i64 {
        self.utilities.as_ref().map_or(0, |u| u.get(family, place))
    }

    pub fn has_lower_quotas(&self) -> bool {
        self.places.iter().any(Place::has_lower_quota)
    }

    pub fn with_utilities(&self, utilities: Option<UtilityMatrix>) -> Result<Self> {
        Self::new(
            self.services,
            self.families.clone(),
            self.places.clone(),
            utilities,
            self.preferences.clone(),
        )
    }

    pub fn with_preferences(&self, preferences: Option<PreferenceProfile>) -> Result<Self> {
        Self::new(
            self.services,
            self.families.clone(),
            self.places.clone(),
            self.utilities.clone(),
            preferences,
        )
    }

    pub fn with_places(&self, places: Vec<Place>) -> Result<Self> {
        Self::new(
            self.services,
            self.families.clone(),
            places,
            self.utilities.clone(),
            self.preferences.clone(),
        )
    }

    /// The sub-instance on the given families (in the given order).
    pub fn restrict_families(&self, families: &[FamilyId]) -> Self {
        Self {
            services: self.services,
            families: families.iter().map(|&f| self.families[f].clone()).collect(),
            places: self.places.clone(),
            utilities: self.utilities.as_ref().map(|u| UtilityMatrix {
                rows: families.iter().map(|&f| u.rows[f].clone()).collect(),
            }),
            preferences: self.preferences.as_ref().map(|p| p.subset(families)),
        }
    }

    fn check_domain(&self, assignment: &Assignment) -> Result<()> {
        if assignment.len() != self.n() {
            return Err(Error::Model(format!(
                "assignment covers {} families, instance has {}",
                assignment.len(),
                self.n()
            )));
        }
        if let Some(p) = assignment.targets().iter().flatten().find(|&&p| p >= self.m()) {
            return Err(Error::Model(format!("assignment refers to unknown place {p}")));
        }
        Ok(())
    }

    /// All load vectors at once, one per place.
    pub fn loads(&self, assignment: &Assignment) -> Result<Vec<Vec<u64>>> {
        self.check_domain(assignment)?;
        let mut loads = vec![vec![0u64; self.services]; self.m()];
        for (f, target) in assignment.targets().iter().enumerate() {
            if let Some(p) = *target {
                for (l, r) in loads[p].iter_mut().zip(self.requirement(f)) {
                    *l = l.checked_add(*r).ok_or(Error::Overflow("load"))?;
                }
            }
        }
        Ok(loads)
    }

    /// Componentwise sum of requirements of the families assigned to `place`.
    pub fn load(&self, assignment: &Assignment, place: PlaceId) -> Result<Vec<u64>> {
        if place >= self.m() {
            return Err(Error::Model(format!("unknown place {place}")));
        }
        Ok(self.loads(assignment)?.swap_remove(place))
    }

    /// Every place's load lies within its lower and upper quota.
    pub fn is_feasible(&self, assignment: &Assignment) -> bool {
        match self.loads(assignment) {
            Ok(loads) => self
                .places
                .iter()
                .zip(&loads)
                .all(|(p, l)| p.within_quotas(l)),
            Err(_) => false,
        }
    }

    /// Every assigned family sits at a place on its preference list.
    pub fn is_acceptable(&self, assignment: &Assignment) -> Result<bool> {
        let prefs = self
            .preferences
            .as_ref()
            .ok_or_else(|| inapplicable("acceptability needs preferences"))?;
        self.check_domain(assignment)?;
        Ok(assignment
            .targets()
            .iter()
            .enumerate()
            .all(|(f, t)| t.is_none_or(|p| prefs.is_acceptable(f, p))))
    }

    pub fn is_complete(&self, assignment: &Assignment) -> bool {
        assignment.len() == self.n() && assignment.targets().iter().all(Option::is_some)
    }

    pub fn total_utility(&self, assignment: &Assignment) -> Result<i64> {
        let utilities = self
            .utilities
            .as_ref()
            .ok_or_else(|| inapplicable("total utility needs a utility matrix"))?;
        self.check_domain(assignment)?;
        assignment
            .targets()
            .iter()
            .enumerate()
            .filter_map(|(f, t)| t.map(|p| utilities.get(f, p)))
            .try_fold(0i64, |acc, u| acc.checked_add(u))
            .ok_or(Error::Overflow("total utility"))
    }

    /// Whether `candidate` is a Pareto improvement over `baseline`.
    ///
    /// Both assignments must be feasible and acceptable.
    pub fn is_pareto_improvement(&self, candidate: &Assignment, baseline: &Assignment) -> Result<bool> {
        let prefs = self
            .preferences
            .as_ref()
            .ok_or_else(|| inapplicable("Pareto comparison needs preferences"))?;
        for (name, a) in [("candidate", candidate), ("baseline", baseline)] {
            if !self.is_feasible(a) || !self.is_acceptable(a)? {
                return Err(Error::Precondition(format!("{name} is not feasible and acceptable")));
            }
        }
        let mut strict = false;
        for f in 0..self.n() {
            match prefs.compare(f, candidate.get(f), baseline.get(f)) {
                Some(Ordering::Less) => return Ok(false),
                Some(Ordering::Greater) => strict = true,
                Some(Ordering::Equal) => {}
                None => return Err(Error::Internal("incomparable outcomes".into())),
            }
        }
        Ok(strict)
    }

    /// Removes families that need nothing and cannot raise the objective.
    ///
    /// A family is removed when its requirement vector is all zero and either
    /// there is no utility matrix or all its utilities are non-positive.
    pub fn normalize(&self) -> Normalized {
        let removable = |f: FamilyId| {
            self.requirement(f).iter().all(|&r| r == 0)
                && self
                    .utilities
                    .as_ref()
                    .is_none_or(|u| u.row(f).iter().all(|&x| x <= 0))
        };
        let (removed, kept): (Vec<_>, Vec<_>) = (0..self.n()).partition(|&f| removable(f));
        Normalized {
            instance: self.restrict_families(&kept),
            removed,
            kept,
        }
    }

    pub fn structural_params(&self) -> StructuralParams {
        let rmax = self
            .families
            .iter()
            .flat_map(|f| f.requirements.iter().copied())
            .max()
            .unwrap_or(0);
        let cmax = self
            .places
            .iter()
            .flat_map(|p| p.upper.iter().copied())
            .max()
            .unwrap_or(0);
        let (n_ties, equal_preferences, dichotomous_preferences) = match &self.preferences {
            Some(prefs) => (
                (0..self.n()).filter(|&f| prefs.has_ties(f)).count(),
                prefs.ranks.iter().flatten().all(|r| *r == Some(1)),
                prefs.ranks.iter().flatten().all(|r| r.is_none_or(|r| r == 1)),
            ),
            None => (0, false, false),
        };
        StructuralParams {
            n: self.n(),
            m: self.m(),
            t: self.services,
            rmax,
            cmax,
            u_star: None,
            u_max: self.utilities.as_ref().and_then(UtilityMatrix::max_value),
            n_ties,
            has_lower_quotas: self.has_lower_quotas(),
            equal_utilities: self
                .utilities
                .as_ref()
                .is_some_and(|u| u.equal_value().is_some()),
            equal_preferences: self.preferences.is_some() && equal_preferences,
            dichotomous_preferences: self.preferences.is_some() && dichotomous_preferences,
        }
    }
}
