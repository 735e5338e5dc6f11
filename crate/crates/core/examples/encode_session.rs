//! Print the medium generated for a session declared in a `.st` file.

use mbx_core::encodings::{encode_named, parse_sessions};

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let src = std::fs::read_to_string(&args[1]).expect("readable file");
    let file = parse_sessions(&src).unwrap_or_else(|e| panic!("{e}"));
    let name = args.get(2).cloned().unwrap_or_else(|| file.order[0].clone());
    let enc = encode_named(&file, &name).unwrap_or_else(|e| panic!("{e}"));
    print!("{}", enc.source);
}
