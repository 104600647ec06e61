"""Privacy-preserving ride sharing: protocol library and ledger simulator.

Subpackages and modules:

* ``crypto`` — pairing group, commitments, signatures, offer encryption
* ``zksm`` — zero-knowledge set-membership proofs of pick-up arrival
* ``trips`` — grid cloaking, trip catalogs, location encoding
* ``matching`` — feasibility predicates and offer selection
* ``ledger`` — deterministic in-process ledger
* ``contracts`` — bidding, time-locked deposit, fair payment, reputation
* ``agents`` — scripted riders/drivers/provers and the scenario runner
* ``cli`` — ``cloakride run | bench-zksm | verify-trace``
"""

__version__ = "0.1.0"
