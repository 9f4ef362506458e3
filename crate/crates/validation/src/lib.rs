//! Holds the end-to-end acceptance run (`cargo test -p ccc-validation`).
