//! Acceptance suite for ballbeam; see tests/acceptance.rs.
