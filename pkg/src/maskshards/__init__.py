"""Revocable data sharing over a two-part ledger with updating masking shards."""

from .bilinear import BLS12381Group, Element, Kind, ToyGroup, production_group
from .errors import (
    DecodeError,
    EpochError,
    IntegrityError,
    KeeperStateError,
    MaskShardsError,
    ParameterError,
)
from .ledger import (
    Chain,
    DataBlock,
    ShrunkBlock,
    VariableState,
    Variant,
    Warranty,
    WarrantyKind,
    append_block,
    audit_chain,
    audit_variable_state,
    decrypt_block,
    new_ledger,
    update_epoch,
)
from .protocol import (
    LedgerParams,
    keeper_adopt,
    keeper_issue_token,
    keeper_rotate,
    keeper_setup,
    keeper_update_shards,
    provider_decrypt,
    provider_keygen,
    provider_open_grant,
    user_encrypt,
    user_keygen,
    user_seal_grant,
    user_unlock,
)

__version__ = "0.1.0"
