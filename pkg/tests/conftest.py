import io

import pytest

from sealtable.cipher import XorStreamCipher, derive_keys
from sealtable.protect import ProtectConfig, protect
from sealtable.storage import ingest_csv, parse_schema_spec

TABLE1_CSV = (
    "Key,Emp_Name,Salary,Job_Title\n"
    "1,Rajesh,10000,Manager\n"
    "2,Suresh,8000,Asst. Manager\n"
    "3,Mahesh,6000,Peon\n"
)
TABLE1_SCHEMA = "Key:integer:0,Emp_Name:text:0,Salary:integer:1,Job_Title:text:0"
TABLE1_NAME = "Encrypted_Data_Table"


@pytest.fixture
def schema():
    return parse_schema_spec(TABLE1_SCHEMA)


@pytest.fixture
def table1(schema):
    return ingest_csv(io.StringIO(TABLE1_CSV), schema, name=TABLE1_NAME)


@pytest.fixture
def keys():
    return derive_keys(bytes(range(32)))


@pytest.fixture
def xor():
    return XorStreamCipher()


@pytest.fixture
def pair1(table1, keys, xor):
    config = ProtectConfig(noise_fraction=0, shuffle_seed=7, noise_seed=7, principals={"alice"}, nonce_seed=1)
    return protect(table1, keys, config, xor)
