#![allow(dead_code)]

use std::path::{Path, PathBuf};

use janus_core::financial::{
    build_vpg, classify_financial_with, RecognitionConfig, RecognitionMode,
};
use janus_core::frontend::{parse, ContractAST};
use janus_core::graphs::build_facts;

pub const RISKY: [&str; 7] = [
    "transfer",
    "destroy",
    "mint",
    "freeze",
    "pause",
    "param",
    "whitelist",
];

/// The contract described in the introduction: an owner-only transfer backdoor.
pub const EXAMPLE: &str = r#"
contract Example {
    address owner;
    mapping(address => uint) balances;

    modifier onlyOwner() {
        require(msg.sender == owner);
        _;
    }

    constructor() public {
        owner = msg.sender;
    }

    function owner_transfer(address _from, address _to, uint _value) public onlyOwner {
        require(balances[_from] >= _value);
        balances[_from] -= _value;
        balances[_to] += _value;
    }

    function transfer(address _to, uint _value) public {
        require(balances[msg.sender] >= _value);
        balances[msg.sender] -= _value;
        balances[_to] += _value;
    }
}
"#;

pub fn tests_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests")
}

pub fn corpus_path(name: &str) -> PathBuf {
    tests_dir().join("corpus").join(format!("{name}.msol"))
}

pub fn regression_path(name: &str) -> PathBuf {
    tests_dir().join("regression").join(format!("{name}.msol"))
}

pub fn load(path: &Path) -> ContractAST {
    let src = std::fs::read_to_string(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    parse(&src).unwrap_or_else(|e| panic!("{}:{e}", path.display()))
}

pub fn corpus(name: &str) -> ContractAST {
    load(&corpus_path(name))
}

pub fn regression(name: &str) -> ContractAST {
    load(&regression_path(name))
}

/// The seven risky contracts followed by their fixed variants.
pub fn corpus_names() -> Vec<String> {
    RISKY
        .iter()
        .map(|s| s.to_string())
        .chain(RISKY.iter().map(|s| format!("fixed_{s}")))
        .collect()
}

#[derive(Debug, Default, Clone, Copy)]
pub struct Accuracy {
    pub correct: usize,
    pub total: usize,
    pub obf_correct: usize,
    pub obf_total: usize,
    pub contracts: usize,
}

impl Accuracy {
    pub fn overall(&self) -> f64 {
        self.correct as f64 / self.total as f64
    }

    pub fn obfuscated(&self) -> f64 {
        self.obf_correct as f64 / self.obf_total as f64
    }
}

/// Score the recognizer against the labeled desk set.
pub fn desk_set_accuracy(mode: RecognitionMode) -> Accuracy {
    let dir = tests_dir().join("recognition");
    let labels: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("labels.json")).unwrap()).unwrap();
    let cfg = RecognitionConfig {
        mode,
        ..Default::default()
    };
    let mut acc = Accuracy::default();
    for c in labels["contracts"].as_array().unwrap() {
        let ast = load(&dir.join(c["file"].as_str().unwrap()));
        let obf = c["obfuscated"].as_bool().unwrap();
        let financial: Vec<&str> = c["financial"]
            .as_array()
            .unwrap()
            .iter()
            .map(|x| x.as_str().unwrap())
            .collect();
        let g = build_vpg(&ast, &build_facts(&ast));
        acc.contracts += 1;
        for v in classify_financial_with(&g, &ast, &cfg) {
            let good = v.is_financial == financial.contains(&v.variable.as_str());
            acc.total += 1;
            acc.correct += usize::from(good);
            if obf {
                acc.obf_total += 1;
                acc.obf_correct += usize::from(good);
            }
        }
    }
    acc
}
