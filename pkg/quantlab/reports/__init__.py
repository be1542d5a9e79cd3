"""Report schemas and file writers."""
