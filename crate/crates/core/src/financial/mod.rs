//! Financial-variable recognition and risk filtering.

pub mod classify;
pub mod filter;
pub mod lexicon;
pub mod vpg;

pub use classify::{
    classify_financial, classify_financial_with, shapes, FinancialVerdict, RecognitionConfig,
    RecognitionMode, Shapes,
};
pub use filter::{financial_set, risk_filter};
pub use lexicon::Lexicon;
pub use vpg::{build_vpg, EdgeKind, NodeKind, VariablePropertyGraph};
