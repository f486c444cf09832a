from lfmd.cli import main

raise SystemExit(main())
