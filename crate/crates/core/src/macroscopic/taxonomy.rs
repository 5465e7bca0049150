use std::fmt;
use std::str::FromStr;

use super::fit::{fit_component, QuadFit};
use super::MacroError;
use crate::archetype::Archetype;
use crate::model::{Component, Trajectory};

/// Shape of one trajectory component over the observation window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DynamicsClass {
    /// Linear, growing.
    Ascending,
    /// No acceptable trend.
    Constant,
    /// Linear, shrinking.
    Descending,
    /// Growing and bending up (superlinear).
    SuperAscending,
    /// Growing and bending down (sublinear).
    SubAscending,
    /// Shrinking and bending up (sublinear).
    SubDescending,
    /// Shrinking and bending down (superlinear).
    SuperDescending,
}

impl DynamicsClass {
    pub const ALL: [DynamicsClass; 7] = [
        DynamicsClass::Ascending,
        DynamicsClass::Constant,
        DynamicsClass::Descending,
        DynamicsClass::SuperAscending,
        DynamicsClass::SubAscending,
        DynamicsClass::SubDescending,
        DynamicsClass::SuperDescending,
    ];

    pub fn arrow(self) -> &'static str {
        match self {
            DynamicsClass::Ascending => "↑",
            DynamicsClass::Constant => "↕",
            DynamicsClass::Descending => "↓",
            DynamicsClass::SuperAscending => "⇈",
            DynamicsClass::SubAscending => "↿",
            DynamicsClass::SubDescending => "⇂",
            DynamicsClass::SuperDescending => "⇊",
        }
    }

    /// ASCII code used in CSV files.
    pub fn code(self) -> &'static str {
        match self {
            DynamicsClass::Ascending => "up",
            DynamicsClass::Constant => "flat",
            DynamicsClass::Descending => "down",
            DynamicsClass::SuperAscending => "up-super",
            DynamicsClass::SubAscending => "up-sub",
            DynamicsClass::SubDescending => "down-sub",
            DynamicsClass::SuperDescending => "down-super",
        }
    }

    /// Linear or superlinear growth: the component counts as an activity.
    pub fn is_active(self) -> bool {
        matches!(
            self,
            DynamicsClass::Ascending | DynamicsClass::SuperAscending
        )
    }

    pub fn is_ascending(self) -> bool {
        matches!(
            self,
            DynamicsClass::Ascending | DynamicsClass::SuperAscending | DynamicsClass::SubAscending
        )
    }

    pub fn is_descending(self) -> bool {
        matches!(
            self,
            DynamicsClass::Descending
                | DynamicsClass::SuperDescending
                | DynamicsClass::SubDescending
        )
    }
}

impl fmt::Display for DynamicsClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.arrow())
    }
}

impl FromStr for DynamicsClass {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        DynamicsClass::ALL
            .into_iter()
            .find(|c| c.code() == s || c.arrow() == s)
            .ok_or_else(|| format!("unknown dynamics class `{s}`"))
    }
}

/// Thresholds of the shape taxonomy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShapeParams {
    /// Below this `|a2/a1|` the quadratic term is dropped.
    pub linearity_eps: f64,
    /// Minimum R² for a model to count as a trend rather than a constant.
    pub r2_min: f64,
}

impl Default for ShapeParams {
    fn default() -> Self {
        ShapeParams {
            linearity_eps: 0.0085,
            r2_min: 0.7,
        }
    }
}

fn sign(x: f64) -> i8 {
    if x > 0.0 {
        1
    } else if x < 0.0 {
        -1
    } else {
        0
    }
}

/// Whether the fit is classified with its linear model.
pub(crate) fn uses_linear_model(fit: &QuadFit, linearity_eps: f64) -> bool {
    // a2 = 0 covers the 0/0 case; a1 = 0 with a2 != 0 is an infinite ratio
    fit.a2 == 0.0 || (fit.a1 != 0.0 && (fit.a2 / fit.a1).abs() < linearity_eps)
}

pub fn classify_dynamics(fit: &QuadFit, params: &ShapeParams) -> DynamicsClass {
    if uses_linear_model(fit, params.linearity_eps) {
        if fit.r2_linear < params.r2_min {
            return DynamicsClass::Constant;
        }
        return match sign(fit.slope) {
            1 => DynamicsClass::Ascending,
            -1 => DynamicsClass::Descending,
            _ => DynamicsClass::Constant,
        };
    }
    if fit.r2_quadratic < params.r2_min {
        return DynamicsClass::Constant;
    }
    let direction = match sign(fit.net_change()) {
        0 => sign(fit.a1),
        s => s,
    };
    match (direction, sign(fit.a2)) {
        (1, 1) => DynamicsClass::SuperAscending,
        (1, _) => DynamicsClass::SubAscending,
        (-1, 1) => DynamicsClass::SubDescending,
        (-1, _) => DynamicsClass::SuperDescending,
        _ => DynamicsClass::Constant,
    }
}

/// Macro cluster label: publishing shape and social shape.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MacroKey {
    pub posts: DynamicsClass,
    pub friends: DynamicsClass,
}

impl MacroKey {
    pub fn new(posts: DynamicsClass, friends: DynamicsClass) -> Self {
        MacroKey { posts, friends }
    }

    /// All 49 keys.
    pub fn all() -> impl Iterator<Item = MacroKey> {
        DynamicsClass::ALL.into_iter().flat_map(|p| {
            DynamicsClass::ALL
                .into_iter()
                .map(move |f| MacroKey::new(p, f))
        })
    }

    /// ASCII form, e.g. `up/flat`.
    pub fn code(&self) -> String {
        format!("{}/{}", self.posts.code(), self.friends.code())
    }
}

impl fmt::Display for MacroKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "M{}{}", self.posts, self.friends)
    }
}

impl FromStr for MacroKey {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (p, f) = s
            .split_once('/')
            .ok_or_else(|| format!("macro key `{s}` is not of the form posts/friends"))?;
        Ok(MacroKey::new(p.parse()?, f.parse()?))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryShape {
    pub key: MacroKey,
    pub posts: QuadFit,
    pub friends: QuadFit,
}

pub fn classify_trajectory(
    traj: &Trajectory,
    params: &ShapeParams,
) -> Result<TrajectoryShape, MacroError> {
    let t = traj.times();
    let posts = fit_component(&t, &traj.series(Component::Posts))?;
    let friends = fit_component(&t, &traj.series(Component::Friends))?;
    Ok(TrajectoryShape {
        key: MacroKey::new(
            classify_dynamics(&posts, params),
            classify_dynamics(&friends, params),
        ),
        posts,
        friends,
    })
}

/// `√(R²_P · R²_F)` using, per component, the R² of the model its class
/// was read from.
pub fn fit_quality(shape: &TrajectoryShape, params: &ShapeParams) -> f64 {
    let q = |fit: &QuadFit| {
        let r2 = if uses_linear_model(fit, params.linearity_eps) {
            fit.r2_linear
        } else {
            fit.r2_quadratic
        };
        r2.clamp(0.0, 1.0)
    };
    (q(&shape.posts) * q(&shape.friends)).sqrt()
}

pub fn macro_archetype(key: MacroKey) -> Archetype {
    match (key.posts.is_active(), key.friends.is_active()) {
        (true, true) => Archetype::BloggerSocializer,
        (true, false) => Archetype::Blogger,
        (false, true) => Archetype::Socializer,
        (false, false) => Archetype::Reader,
    }
}

/// Fraction of trajectories whose components move in opposite directions.
pub fn anticorrelated_share(keys: &[MacroKey]) -> Result<f64, MacroError> {
    if keys.is_empty() {
        return Err(MacroError::EmptyInput);
    }
    let opposite = keys
        .iter()
        .filter(|k| {
            (k.posts.is_ascending() && k.friends.is_descending())
                || (k.posts.is_descending() && k.friends.is_ascending())
        })
        .count();
    Ok(opposite as f64 / keys.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use DynamicsClass::*;

    fn fit_of(t0: f64, t1: f64, g: impl Fn(f64) -> f64) -> QuadFit {
        let n = 60;
        let t: Vec<f64> = (0..=n)
            .map(|i| t0 + (t1 - t0) * i as f64 / n as f64)
            .collect();
        let v: Vec<f64> = t.iter().map(|&x| g(x)).collect();
        fit_component(&t, &v).unwrap()
    }

    fn class(t0: f64, t1: f64, g: impl Fn(f64) -> f64) -> DynamicsClass {
        classify_dynamics(&fit_of(t0, t1, g), &ShapeParams::default())
    }

    #[test]
    fn lines() {
        assert_eq!(class(0.0, 140.0, |t| 3.0 * t), Ascending);
        assert_eq!(class(0.0, 140.0, |t| -3.0 * t), Descending);
        assert_eq!(class(0.0, 140.0, |_| 12.0), Constant);
    }

    #[test]
    fn quadratics() {
        assert_eq!(class(0.0, 10.0, |t| t * t), SuperAscending);
        assert_eq!(class(0.0, 10.0, |t| -t * t), SuperDescending);
        assert_eq!(class(0.0, 5.0, |t| 20.0 * t - t * t), SubAscending);
        assert_eq!(class(0.0, 5.0, |t| -20.0 * t + t * t), SubDescending);
    }

    #[test]
    fn noisy_flat_is_constant() {
        // deterministic zig-zag noise around a constant
        let t: Vec<f64> = (0..140).map(|d| d as f64).collect();
        let v: Vec<f64> = (0..140)
            .map(|d| 50.0 + [0.0, 1.0, -1.0, 2.0, -2.0, 1.0, 0.0][d % 7])
            .collect();
        let f = fit_component(&t, &v).unwrap();
        assert!(f.r2_linear < 0.1);
        assert_eq!(classify_dynamics(&f, &ShapeParams::default()), Constant);
    }

    #[test]
    fn archetype_rule() {
        assert_eq!(
            macro_archetype(MacroKey::new(Constant, Constant)),
            Archetype::Reader
        );
        assert_eq!(
            macro_archetype(MacroKey::new(Ascending, Constant)),
            Archetype::Blogger
        );
        assert_eq!(
            macro_archetype(MacroKey::new(Constant, SuperAscending)),
            Archetype::Socializer
        );
        assert_eq!(
            macro_archetype(MacroKey::new(SuperAscending, Ascending)),
            Archetype::BloggerSocializer
        );
        assert_eq!(
            macro_archetype(MacroKey::new(SubAscending, Constant)),
            Archetype::Reader
        );
    }

    #[test]
    fn archetype_counts_over_all_keys() {
        let mut counts = [0usize; 4];
        for key in MacroKey::all() {
            counts[macro_archetype(key).index()] += 1;
        }
        // 2 active classes out of 7 per component
        assert_eq!(counts[Archetype::BloggerSocializer.index()], 4);
        assert_eq!(counts[Archetype::Blogger.index()], 10);
        assert_eq!(counts[Archetype::Socializer.index()], 10);
        assert_eq!(counts[Archetype::Reader.index()], 25);
        assert_eq!(MacroKey::all().count(), 49);
    }

    #[test]
    fn anticorrelated_cases() {
        let opp = vec![MacroKey::new(Ascending, Descending); 3];
        assert_eq!(anticorrelated_share(&opp).unwrap(), 1.0);
        let same = vec![MacroKey::new(Ascending, Ascending); 3];
        assert_eq!(anticorrelated_share(&same).unwrap(), 0.0);
        let mixed = [
            MacroKey::new(SubAscending, SuperDescending),
            MacroKey::new(Constant, Descending),
        ];
        assert_eq!(anticorrelated_share(&mixed).unwrap(), 0.5);
        assert_eq!(anticorrelated_share(&[]), Err(MacroError::EmptyInput));
    }

    #[test]
    fn key_codes_round_trip() {
        for key in MacroKey::all() {
            assert_eq!(key.code().parse::<MacroKey>().unwrap(), key);
        }
    }

    #[test]
    fn classify_trajectory_components() {
        let rows: Vec<(f64, i64, i64)> = (0..140).map(|d| (d as f64, 2 * d, 0)).collect();
        let s = classify_trajectory(
            &Trajectory::from_tuples("u", &rows),
            &ShapeParams::default(),
        )
        .unwrap();
        assert_eq!(s.key, MacroKey::new(Ascending, Constant));
        let rows: Vec<(f64, i64, i64)> = (0..140).map(|d| (d as f64, 2 * d, d)).collect();
        let s = classify_trajectory(
            &Trajectory::from_tuples("u", &rows),
            &ShapeParams::default(),
        )
        .unwrap();
        assert_eq!(s.key, MacroKey::new(Ascending, Ascending));
    }

    proptest! {
        #[test]
        fn time_shift_keeps_linear_class(slope in -5.0f64..5.0, icpt in -50.0f64..50.0, shift in 0.0f64..300.0) {
            prop_assume!(slope.abs() > 1e-3);
            let a = class(0.0, 140.0, |t| icpt + slope * t);
            let b = class(shift, shift + 140.0, |t| icpt + slope * (t - shift));
            prop_assert_eq!(a, b);
        }

        #[test]
        fn time_shift_keeps_strong_quadratic_class(a1 in -1.0f64..1.0, a2 in prop::sample::select(vec![-0.05, -0.02, 0.02, 0.05]), shift in 0.0f64..50.0) {
            let params = ShapeParams::default();
            let f0 = fit_of(0.0, 140.0, |t| a1 * t + a2 * t * t);
            let f1 = fit_of(shift, shift + 140.0, |t| a1 * (t - shift) + a2 * (t - shift) * (t - shift));
            prop_assume!(!uses_linear_model(&f0, params.linearity_eps * 2.0));
            prop_assume!(!uses_linear_model(&f1, params.linearity_eps * 2.0));
            prop_assert_eq!(classify_dynamics(&f0, &params), classify_dynamics(&f1, &params));
        }
    }
}
