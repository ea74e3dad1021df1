// CLI entry point; subcommands are filled in as the stack comes up.
int main() { return 0; }
