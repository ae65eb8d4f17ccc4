fn main() -> anyhow::Result<()> {
    heteffect_cli::run()
}
