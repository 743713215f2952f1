"""VO-centric grid operations toolkit.

A simulated grid fabric with injectable misconfiguration, plus the
monitoring, auditing, accounting and incident machinery a VO support team
runs on top of it: probe scheduling with alarm hysteresis, storage
reconciliation and decommissioning, usage aggregation, ticket lifecycle
tracking, and a reliable-resource whitelist.
"""

__version__ = "0.1.0"
