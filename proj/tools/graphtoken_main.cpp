// CLI entry point; subcommands are wired up as the library grows.
int main() { return 0; }
