"""One module per `forge` subcommand."""
