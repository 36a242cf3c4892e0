//! Small hand-built instances used by tests and examples.

use crate::model::{Family, Instance, Place, PreferenceProfile, UtilityMatrix};

/// The two-place, two-service worked example.
///
/// Families need (4,2), (2,0), (6,2), (3,1). The first place has quotas
/// (0,2)..(10,3), the second (0,2)..(8,3). Family 0 prefers place 0, the
/// others prefer place 1.
pub fn ex1() -> Instance {
    let families = vec![
        Family::new(1, vec![4, 2]),
        Family::new(2, vec![2, 0]),
        Family::new(3, vec![6, 2]),
        Family::new(4, vec![3, 1]),
    ];
    let places = vec![
        Place::new(1, vec![0, 2], vec![10, 3]),
        Place::new(2, vec![0, 2], vec![8, 3]),
    ];
    let utilities = UtilityMatrix::new(vec![vec![2, 1], vec![1, 2], vec![1, 2], vec![1, 2]]);
    let preferences = PreferenceProfile::from_groups(
        &[
            vec![vec![0], vec![1]],
            vec![vec![1], vec![0]],
            vec![vec![1], vec![0]],
            vec![vec![1], vec![0]],
        ],
        2,
    )
    .expect("valid preferences");
    Instance::new(2, families, places, Some(utilities), Some(preferences)).expect("valid instance")
}
