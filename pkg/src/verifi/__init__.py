"""verifi: credential anchoring and verification platform.

Certificates live in a content-addressed object store; their encrypted
content identifiers are anchored on a quorum-validated hash-chained
ledger; a role-based REST workflow mediates applicants, admins,
companies, and general users.
"""

__version__ = "0.1.0"
