//! Holds the acceptance suite in `tests/acceptance.rs`; the criteria
//! themselves live in `espider::check`.
