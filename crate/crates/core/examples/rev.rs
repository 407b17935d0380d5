fn main() {
    let sp =
        hornstrip::frontend::parse_prolog(include_str!("../tests/fixtures/reverse.pl")).unwrap();
    let mut cfg = hornstrip::removal::Config::default();
    if std::env::args().any(|a| a == "--no-diff") {
        cfg.diff_introduce = false;
    }
    let t = std::time::Instant::now();
    match hornstrip::removal::run(&sp.program, &cfg) {
        Ok(o) => {
            for c in &o.program.clauses {
                println!("{}", hornstrip::display::clause(c));
            }
            println!(
                "iter {} defs {} r7 {} audit {}",
                o.iterations, o.definitions, o.r7_used, o.audit
            );
        }
        Err(e) => println!("error: {e}"),
    }
    eprintln!("{:?}", t.elapsed());
}
