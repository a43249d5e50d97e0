//! Small hand-built instances used in tests, examples and the CLI docs.

use crate::instance::PreferenceInstance;

/// Four members, `1:(2,3,4) 2:(3,1,4) 3:(1,2,4) 4:(1,2,3)`. Its only stable
/// partition is `(1 2 3)(4)`, so it has no stable matching.
pub fn classic_instance() -> PreferenceInstance {
    PreferenceInstance::from_one_based(&[vec![2, 3, 4], vec![3, 1, 4], vec![1, 2, 4], vec![1, 2, 3]])
        .expect("valid instance")
}

/// Four members, `1:(4,2,3) 2:(3,1,4) 3:(2,4,1) 4:(1,3,2)`. Members 1 and 3
/// want to swap partners under the matching `{(1,2),(3,4)}`.
pub fn exchange_instance() -> PreferenceInstance {
    PreferenceInstance::from_one_based(&[vec![4, 2, 3], vec![3, 1, 4], vec![2, 4, 1], vec![1, 3, 2]])
        .expect("valid instance")
}
