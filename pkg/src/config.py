import os
from dotenv import load_dotenv

# Load environment variables
load_dotenv()

# Logging
LOG_DIR = os.getenv("LOG_DIR", "logs")
LOG_LEVEL = os.getenv("LOG_LEVEL", "DEBUG")
LOG_FILE_SIZE = os.getenv("LOG_FILE_SIZE", "10MB")
LOG_RETENTION = os.getenv("LOG_RETENTION", "5")
LOG_COMPRESSION = os.getenv("LOG_COMPRESSION", "zip")
DEBUG_MODE = os.getenv("DEBUG_MODE", "false").lower() == "true"

# Pipeline
EXTRACT_TIMEOUT = float(os.getenv("EXTRACT_TIMEOUT", 15))
SIMPLIFY_MAX_PASSES = int(os.getenv("SIMPLIFY_MAX_PASSES", 10000))
RULE_SEARCH_DEPTH = int(os.getenv("RULE_SEARCH_DEPTH", 64))

# Oracle guards
ORACLE_MAX_CANDIDATES = int(os.getenv("ORACLE_MAX_CANDIDATES", 10_000_000))
ORACLE_MAX_INPUTS = int(os.getenv("ORACLE_MAX_INPUTS", 22))
ORACLE_MAX_VERTICES = int(os.getenv("ORACLE_MAX_VERTICES", 18))

# HTTP API
APP_HOST = os.getenv("APP_HOST", "0.0.0.0")
APP_PORT = int(os.getenv("APP_PORT", 8000))
APP_VERSION = os.getenv("APP_VERSION", "1.0.0")
