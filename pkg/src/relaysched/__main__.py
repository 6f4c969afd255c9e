from relaysched.cli import main

raise SystemExit(main())
