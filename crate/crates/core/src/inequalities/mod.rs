//! Desk-scale verification of the operator positivity statements and
//! combinatorial identities behind the stability of the interacting gas:
//! two-body ground-state positivity, the localized kinetic/interaction form
//! of the shell construction, half/half partition coefficients with their
//! operator-level splitting identity, the covered-pair counting bound, and
//! scaling diagnostics for the proximity indicator and interaction-norm
//! inequalities.

mod covering_mc;
mod forms;
mod partitions;
mod scaling;

pub use covering_mc::{covering_energy_bound_check, CoveringBoundReport};
pub use forms::{
    sampled_localized_form, shell_form_check, shell_form_check_scaled, split_potential,
    two_body_ground_energy, verify_split_positivity, FormCheckMethod, FormCheckResult,
    SplitPositivityReport, TwoBodySettings, POSITIVITY_TOL,
};
pub use partitions::{
    hamiltonian_partition_identity, pair_splitting_identity_defect, partition_identities,
    PartitionStats, Ratio,
};
pub use scaling::{
    indicator_ratio_on_grid, interaction_norm_diagnostics, proximity_scaling,
    InteractionNormReport, ProximityScalingReport,
};
