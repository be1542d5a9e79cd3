"""Command-line front end: config loading, suite dispatch, summary and exit code."""
