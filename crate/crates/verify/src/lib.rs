//! Acceptance checks for `dmc-ident`; run them with
//! `cargo test -p dmc-ident-verify --test acceptance`.
