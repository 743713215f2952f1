"""Operational shell: persistent store, scenario runner, HTTP API and CLI."""
