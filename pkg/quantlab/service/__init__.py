"""Verification suites, one per runner subcommand."""
