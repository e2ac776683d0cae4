fn main() {
    // placeholder until the CLI is wired up
    eprintln!("qaw CLI not yet implemented");
    std::process::exit(2);
}
