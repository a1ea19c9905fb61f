//! Holds the `acceptance` test target. It lives in its own package so that
//! `cargo test` runs it after the library and CLI suites.
